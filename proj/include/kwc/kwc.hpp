#pragma once

#include "grid.hpp"
#include "model.hpp"
#include "interfacial.hpp"
#include "linalg.hpp"
#include "elliptic.hpp"
#include "expression.hpp"
#include "evolution.hpp"
#include "profiles.hpp"
#include "manufactured.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "config.hpp"
