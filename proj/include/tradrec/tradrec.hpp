#pragma once

#include "tradrec/common.hpp"
#include "tradrec/matrix.hpp"
#include "tradrec/trade_graph.hpp"
#include "tradrec/diffusion.hpp"
#include "tradrec/fitness.hpp"
#include "tradrec/evaluation.hpp"
#include "tradrec/counterfactual.hpp"
#include "tradrec/io.hpp"
