#include "conn/cli.hpp"

int main(int argc, char** argv) { return conn::cli_dispatch(argc, argv); }
