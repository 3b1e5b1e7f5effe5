#include "doctest.h"
#include "fhe/config.hpp"
#include "fhe/errors.hpp"

using namespace fhe;

TEST_CASE("config round-trips through its text form") {
    RunConfig c;
    c.grid.fibre_n = 8;
    c.grid.base_kind = BaseKind::Annulus;
    c.grid.base_n0 = 17;
    c.grid.base_n1 = 8;
    c.grid.k = 2.5;
    c.preset = "annulus_mixed";
    c.lambda = 0.5;
    c.k_list = {16, 64};
    c.seed = 99;
    RunConfig back = RunConfig::from_text(c.to_text());
    CHECK(back.to_text() == c.to_text());
}

TEST_CASE("config parsing errors") {
    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/path.cfg"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("[run]\nlambda = banana\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("[run]\nlambda = -1\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("[run]\nscheme = euler\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("[grid]\nbase_kind = sphere\n"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("not a key value line"), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_text("[run]\nk_list = \n"), ConfigError);
}

TEST_CASE("comments and defaults") {
    RunConfig c = RunConfig::from_text("# comment only\n[run]\nseed = 7 # trailing\n");
    CHECK(c.seed == 7);
    CHECK(c.scheme == "rk4");
    CHECK(c.grid.fibre_n == 16);
}
