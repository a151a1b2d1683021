#include "rsub/harness/harness.hpp"

int main(int argc, char** argv) { return rsub::cmd_dispatch(argc, argv); }
