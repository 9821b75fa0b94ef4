#pragma once

#include "pgorder/models/aggregate.hpp"
#include "pgorder/models/bilstm_position.hpp"
#include "pgorder/models/checkpoint.hpp"
#include "pgorder/models/config.hpp"
#include "pgorder/models/factory.hpp"
#include "pgorder/models/model.hpp"
#include "pgorder/models/pairwise.hpp"
#include "pgorder/models/pointer_lstm.hpp"
#include "pgorder/models/pointer_mlp.hpp"
#include "pgorder/models/positional.hpp"
#include "pgorder/models/seq2seq.hpp"
