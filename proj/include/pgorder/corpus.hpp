#pragma once

#include "pgorder/corpus/embed_client.hpp"
#include "pgorder/corpus/generator.hpp"
#include "pgorder/corpus/io.hpp"
#include "pgorder/corpus/split.hpp"
#include "pgorder/corpus/types.hpp"
