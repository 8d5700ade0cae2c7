// Copyright 2026 The CVM Analytics Authors
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

#ifndef CVM_CVM_HPP_
#define CVM_CVM_HPP_

#include "cvm/cli_reports.hpp"
#include "cvm/cvm_analytics.hpp"
#include "cvm/error.hpp"
#include "cvm/format.hpp"
#include "cvm/ls_engine.hpp"
#include "cvm/market_sim.hpp"
#include "cvm/nps_metrics.hpp"
#include "cvm/render.hpp"
#include "cvm/rng.hpp"
#include "cvm/survey_store.hpp"
#include "cvm/value_tree.hpp"

#endif  // CVM_CVM_HPP_
