#pragma once

#include "core.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "windows.hpp"
#include "transforms.hpp"
#include "paley_wiener.hpp"
#include "uniqueness.hpp"
#include "recovery.hpp"
#include "io.hpp"
#include "scenario.hpp"
