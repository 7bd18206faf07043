#include <catch2/catch_amalgamated.hpp>
#include "meponmf/meponmf.hpp"
