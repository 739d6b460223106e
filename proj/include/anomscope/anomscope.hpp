#pragma once

#include "anomscope/config.hpp"
#include "anomscope/error.hpp"
#include "anomscope/eval.hpp"
#include "anomscope/frame.hpp"
#include "anomscope/frame_io.hpp"
#include "anomscope/lbp.hpp"
#include "anomscope/mlp.hpp"
#include "anomscope/pipeline.hpp"
#include "anomscope/scalespace.hpp"
#include "anomscope/text.hpp"
