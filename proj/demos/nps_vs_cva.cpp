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

// NPS against CVA on the same respondents, plus the coarseness of the NPS
// bands: moving every detractor to 6 leaves the score unchanged.

#include <algorithm>
#include <iostream>

#include "cvm/cvm.hpp"

int main() try {
  const std::string data = CVM_DATA_DIR;
  auto tree = std::make_shared<const cvm::ValueTree>(cvm::load_tree_file(data + "/automobile_tree.json"));
  const auto market =
      cvm::ingest_responses_file(data + "/canonical_survey.csv", tree, "our_company").sample;
  const auto [own, competitors] = cvm::split_by_supplier(market);
  const cvm::FittedHierarchy h = cvm::fit_hierarchy(market);

  const auto cmp = cvm::nps_vs_cva_report(own, h, competitors);
  std::cout << cvm::render_nps_comparison(cmp) << '\n';

  auto ratings = cvm::outcome_ratings(own, cvm::OutcomeKind::kRecommend);
  std::replace_if(ratings.begin(), ratings.end(), [](int r) { return r <= 6; }, 6);
  std::cout << "all detractors at 6: " << cvm::nps_summary_line(cvm::nps(ratings)) << '\n';
  return 0;
} catch (const std::exception& e) {
  std::cerr << e.what() << '\n';
  return 1;
}
