#pragma once

// Command-line entry point; also callable in-process from tests.

#include <string>
#include <vector>

namespace qenc {

int cli_main(const std::vector<std::string>& args);

}  // namespace qenc
