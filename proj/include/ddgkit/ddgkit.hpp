#pragma once

#include "ddgkit/csv.hpp"
#include "ddgkit/dataset.hpp"
#include "ddgkit/error.hpp"
#include "ddgkit/estimators.hpp"
#include "ddgkit/frequency_model.hpp"
#include "ddgkit/harness.hpp"
#include "ddgkit/lattice.hpp"
#include "ddgkit/likelihood_table.hpp"
#include "ddgkit/logmath.hpp"
#include "ddgkit/oracle.hpp"
#include "ddgkit/sequence.hpp"
#include "ddgkit/stats.hpp"
#include "ddgkit/unfolded.hpp"
