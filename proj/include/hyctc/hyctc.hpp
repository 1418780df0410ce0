// hyctc/hyctc.hpp

// Copyright 2026  The hyctc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Umbrella header.

#include "hyctc/error.hpp"
#include "hyctc/matrix.hpp"
#include "hyctc/ctc.hpp"
#include "hyctc/tokenizer.hpp"
#include "hyctc/segments.hpp"
#include "hyctc/lexicon_graph.hpp"
#include "hyctc/hybrid_decoder.hpp"
#include "hyctc/eval.hpp"
#include "hyctc/lstm.hpp"
#include "hyctc/model.hpp"
#include "hyctc/train.hpp"
#include "hyctc/corpus.hpp"
#include "hyctc/pipeline.hpp"
