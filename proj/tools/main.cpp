// SPDX-License-Identifier: Apache-2.0
#include "apsim/cli.hpp"

int main(int argc, char** argv) { return apsim::cli_main(argc, argv); }
