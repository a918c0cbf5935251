#pragma once

#include "errors.hpp"
#include "grid.hpp"
#include "limiters.hpp"
#include "flux.hpp"
#include "source.hpp"
#include "scheme1d.hpp"
#include "scheme2d.hpp"
#include "oracles.hpp"
#include "csv.hpp"
#include "driver.hpp"
