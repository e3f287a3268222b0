#pragma once

#include "champ/agg/aggregators.hpp"
#include "champ/agg/config.hpp"
#include "champ/attack/adaptive.hpp"
#include "champ/attack/malicious.hpp"
#include "champ/attack/prox.hpp"
#include "champ/bsci/bsci.hpp"
#include "champ/bsci/mia.hpp"
#include "champ/bsci/svm.hpp"
#include "champ/data/backdoor.hpp"
#include "champ/data/dataset.hpp"
#include "champ/data/idx.hpp"
#include "champ/nn/checkpoint.hpp"
#include "champ/nn/layers.hpp"
#include "champ/nn/model.hpp"
#include "champ/nn/serialize.hpp"
#include "champ/report/jsonl.hpp"
#include "champ/rng.hpp"
#include "champ/sim/config.hpp"
#include "champ/sim/simulator.hpp"
#include "champ/types.hpp"
#include "champ/vecmath.hpp"
