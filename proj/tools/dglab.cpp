#include "dglab/cli.hpp"

int main(int argc, char** argv)
{
    return dglab::cli::main_entry(argc, argv);
}
