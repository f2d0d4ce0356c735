#pragma once

#include "irmite/error.hpp"
#include "irmite/numerics.hpp"
#include "irmite/datagen.hpp"
#include "irmite/dataset_csv.hpp"
#include "irmite/domains.hpp"
#include "irmite/learners.hpp"
#include "irmite/metalearners.hpp"
#include "irmite/evaluation.hpp"
#include "irmite/harness.hpp"
#include "irmite/plot.hpp"
