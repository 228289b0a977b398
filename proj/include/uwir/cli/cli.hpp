#pragma once
// Command line front end: validate, train, restore, evaluate.
// Exit codes: 0 success, 1 validation or runtime failure, 2 usage error.

namespace uwir::cli {

int run(int argc, char** argv);

}  // namespace uwir::cli
