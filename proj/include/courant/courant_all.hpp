#pragma once

#include "courant/rational.hpp"
#include "courant/poly.hpp"
#include "courant/derivation.hpp"
#include "courant/linalg.hpp"
#include "courant/metric_module.hpp"
#include "courant/rothstein.hpp"
#include "courant/cmap.hpp"
#include "courant/symbol_map.hpp"
#include "courant/courant.hpp"
#include "courant/random.hpp"
#include "courant/io.hpp"
#include "courant/runner.hpp"
