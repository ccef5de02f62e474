// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "referi/prompt.hpp"
#include "referi/types.hpp"

namespace referi {

/// One evaluation row: a query, an optional gold answer, and a file-unique id.
struct DatasetRecord {
  std::string id;
  std::string query;
  std::optional<std::string> gold;
};

/// Loads line-delimited {"query","answer"} records in file order. Malformed
/// lines report their line number; duplicate queries load with a warning.
FewShotSet load_few_shot(const std::filesystem::path& path);

/// Loads line-delimited {"id","query","gold"?} records; ids must be unique.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);

/// Loads a {"header","example_block","query_block","separator"} template
/// file; strings are literal.
DemonstrationTemplate load_template_file(const std::filesystem::path& path);

}  // namespace referi
