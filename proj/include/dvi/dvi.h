// Copyright 2026 The DVI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#ifndef DVI_DVI_H_
#define DVI_DVI_H_

#include "dvi/csv.h"
#include "dvi/data.h"
#include "dvi/direct.h"
#include "dvi/external_predictor.h"
#include "dvi/format.h"
#include "dvi/model_io.h"
#include "dvi/parallel.h"
#include "dvi/permutation.h"
#include "dvi/predictors.h"
#include "dvi/report_io.h"
#include "dvi/rng.h"
#include "dvi/simulation.h"
#include "dvi/stats.h"
#include "dvi/status.h"
#include "dvi/systemic.h"

#endif  // DVI_DVI_H_
