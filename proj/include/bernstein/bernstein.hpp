#pragma once

// Umbrella header for the library (the CLI lives in bernstein/cli.hpp).

#include <bernstein/config.hpp>
#include <bernstein/error.hpp>
#include <bernstein/feynman_kac.hpp>
#include <bernstein/model.hpp>
#include <bernstein/parallel.hpp>
#include <bernstein/quadrature.hpp>
#include <bernstein/rng.hpp>
#include <bernstein/sde.hpp>
#include <bernstein/spectral.hpp>
#include <bernstein/special_functions.hpp>
#include <bernstein/stats.hpp>
#include <bernstein/verify.hpp>
