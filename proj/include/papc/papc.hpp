#pragma once

#include "papc/audio_io.hpp"
#include "papc/classify.hpp"
#include "papc/common.hpp"
#include "papc/denoise.hpp"
#include "papc/diarize.hpp"
#include "papc/dsp_core.hpp"
#include "papc/features.hpp"
#include "papc/pipeline.hpp"
#include "papc/vad.hpp"
