#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include "qlab/parallel.hpp"

int main(int argc, char** argv)
{
    qlab::configure_threads_from_env();
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
