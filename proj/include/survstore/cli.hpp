#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace survstore {

/// Entry point of the `survstore` command. `args` excludes the program
/// name. Exit codes: 0 success, 1 domain error (code on stderr), 2 usage
/// error (help on stderr).
///
/// Environment: SURVSTORE_DATA_DIR (store root, default ./survstore-data),
/// SURVSTORE_PORT (default 8741), SURVSTORE_BACKUP_URL.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Every leaf subcommand as a space-separated path, e.g. "beacon add".
std::vector<std::string> cli_command_paths();

}  // namespace survstore
