#pragma once

#include <gtest/gtest.h>

#include "oracles.hpp"
