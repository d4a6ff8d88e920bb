#pragma once

// Umbrella header.

#include "tempotrack/archive.hpp"
#include "tempotrack/attention.hpp"
#include "tempotrack/attrans.hpp"
#include "tempotrack/bench.hpp"
#include "tempotrack/box.hpp"
#include "tempotrack/config.hpp"
#include "tempotrack/error.hpp"
#include "tempotrack/eval.hpp"
#include "tempotrack/harness.hpp"
#include "tempotrack/heads.hpp"
#include "tempotrack/image.hpp"
#include "tempotrack/model.hpp"
#include "tempotrack/ops.hpp"
#include "tempotrack/pipeline.hpp"
#include "tempotrack/rng.hpp"
#include "tempotrack/selftest.hpp"
#include "tempotrack/sequence.hpp"
#include "tempotrack/synth.hpp"
#include "tempotrack/tada.hpp"
#include "tempotrack/tensor.hpp"
#include "tempotrack/trace.hpp"
