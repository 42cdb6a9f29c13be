#pragma once

#include "bcmoments/bounds.hpp"
#include "bcmoments/decay.hpp"
#include "bcmoments/error.hpp"
#include "bcmoments/glivenko.hpp"
#include "bcmoments/io.hpp"
#include "bcmoments/lil.hpp"
#include "bcmoments/mdf.hpp"
#include "bcmoments/monte_carlo.hpp"
#include "bcmoments/optimize.hpp"
#include "bcmoments/parallel.hpp"
#include "bcmoments/rates.hpp"
#include "bcmoments/rng.hpp"
#include "bcmoments/sde15.hpp"
#include "bcmoments/segments.hpp"
#include "bcmoments/slln.hpp"
#include "bcmoments/special.hpp"
