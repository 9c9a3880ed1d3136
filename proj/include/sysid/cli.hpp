#pragma once

namespace sysid {

// Entry point of the `sysid` tool. Exit codes: 0 success, 1 usage, 2 data, 3 numeric.
int cli_main(int argc, char** argv);

}  // namespace sysid
