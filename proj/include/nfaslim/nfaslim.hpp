#pragma once

// Scored-NFA toolkit: generation, serialization, learned transition pruning,
// structural cleanup, min-cost execution and overlay cost modeling.

#include "nfaslim/anml.hpp"
#include "nfaslim/config_vector.hpp"
#include "nfaslim/csv.hpp"
#include "nfaslim/execution.hpp"
#include "nfaslim/features.hpp"
#include "nfaslim/forest.hpp"
#include "nfaslim/generator.hpp"
#include "nfaslim/hwcost.hpp"
#include "nfaslim/nfa.hpp"
#include "nfaslim/pipeline.hpp"
#include "nfaslim/pruning.hpp"
#include "nfaslim/rng.hpp"
#include "nfaslim/symbol_set.hpp"
