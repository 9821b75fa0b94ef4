#pragma once

#include "pgorder/bench/config.hpp"
#include "pgorder/bench/figures.hpp"
#include "pgorder/bench/paper_reference.hpp"
#include "pgorder/bench/report.hpp"
#include "pgorder/bench/run.hpp"
