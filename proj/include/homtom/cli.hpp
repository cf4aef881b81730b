#ifndef HOMTOM_CLI_H_
#define HOMTOM_CLI_H_

namespace homtom {

// Command-line front end. Returns the process exit code:
//   0  success
//   2  configuration, usage, or file I/O error
//   3  physical-domain error (efficiency out of range, no sampler, ...)
//   4  numerical-convergence or verification failure
//   1  unexpected internal error
int run_cli(int argc, char** argv);

}  // namespace homtom

#endif
