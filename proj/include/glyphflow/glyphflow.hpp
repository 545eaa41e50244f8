// Copyright (C) 2026 GlyphFlow authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "glyphflow/autograd.hpp"
#include "glyphflow/backbone.hpp"
#include "glyphflow/checkpoint.hpp"
#include "glyphflow/dataset.hpp"
#include "glyphflow/encoders.hpp"
#include "glyphflow/error.hpp"
#include "glyphflow/flow.hpp"
#include "glyphflow/glyphs.hpp"
#include "glyphflow/image.hpp"
#include "glyphflow/metrics.hpp"
#include "glyphflow/optim.hpp"
#include "glyphflow/parallel.hpp"
#include "glyphflow/png_io.hpp"
#include "glyphflow/prompt.hpp"
#include "glyphflow/random.hpp"
#include "glyphflow/tensor.hpp"
#include "glyphflow/trainer.hpp"
#include "glyphflow/utf8.hpp"
