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

// Fits the shipped automobile survey, prints the top-level profile table,
// and walks a few what-if questions down the billing path.

#include <iostream>

#include "cvm/cvm.hpp"

int main() try {
  const std::string data = CVM_DATA_DIR;
  auto tree = std::make_shared<const cvm::ValueTree>(cvm::load_tree_file(data + "/automobile_tree.json"));
  const auto market =
      cvm::ingest_responses_file(data + "/canonical_survey.csv", tree, "our_company").sample;
  const auto [own, competitors] = cvm::split_by_supplier(market);
  const cvm::FittedHierarchy h = cvm::fit_hierarchy(market);

  std::cout << cvm::render_profile_table(cvm::profile_table(h, own, competitors, tree->root())) << '\n';

  for (const auto& node : cvm::path_to_root(*tree, "billing")) {
    std::cout << "raise " << tree->node(node).label << " by 1.0 -> Value +"
              << cvm::format_fixed(cvm::what_if(h, node, 1.0), 3) << '\n';
  }
  const auto first = cvm::rank_priorities(h, own, competitors).ranked.front();
  std::cout << "\nfirst priority: " << tree->node(first.node).label << " (gap "
            << cvm::format_fixed(first.gap, 2) << ", score " << cvm::format_fixed(first.score, 3) << ")\n";
  return 0;
} catch (const std::exception& e) {
  std::cerr << e.what() << '\n';
  return 1;
}
