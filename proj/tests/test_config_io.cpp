#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "doctest.h"

#include "confsafe/config.hpp"
#include "confsafe/episode_io.hpp"
#include "confsafe/sim.hpp"

using namespace confsafe;

namespace {

KeyValues parse(const std::string& text) {
    std::istringstream in(text);
    return parse_key_values(in);
}

EpisodeConfig round_trip(const EpisodeConfig& c) {
    return resolve_config(parse(serialize_config(c)), {});
}

}  // namespace

TEST_CASE("key value parsing") {
    const auto kv = parse("# comment\n\n  c1 = 1000  # trailing\nx0=-2, 0.5\nexample = unicycle\n");
    REQUIRE(kv.size() == 3);
    CHECK(kv[0].first == "c1");
    CHECK(kv[0].second == "1000");
    CHECK(kv[1].second == "-2, 0.5");
    CHECK_THROWS_AS((void)parse("c1 = 1\nc1 = 2\n"), ConfigError);
    CHECK_THROWS_AS((void)parse("no separator here\n"), ConfigError);
}

TEST_CASE("unknown keys and bad values name the key") {
    try {
        (void)resolve_config(parse("c3 = 1\n"), {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "c3");
        CHECK(std::string(e.what()).find("c3") != std::string::npos);
    }
    try {
        (void)resolve_config({}, {{"gamma", "fast"}});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "gamma");
    }
    CHECK_THROWS_AS((void)resolve_config({}, {{"dt_ctrl", "0.0125"}}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config({}, {{"x0", "1,2,3"}}), ConfigError);
    CHECK_THROWS_AS((void)resolve_config({}, {{"R", "-1"}}), ConfigError);
}

TEST_CASE("layering: defaults, file, overrides") {
    const auto c = resolve_config(parse("example = unicycle\nc1 = 5\nseed = 3\n"), {{"c1", "7"}});
    CHECK(c.example == Example::unicycle);
    CHECK(c.weights.c1 == 7.0);
    CHECK(c.seed == 3);
    CHECK(c.problem == Problem::p2);
    const auto forced = resolve_config(parse("example = unicycle\n"), {}, Example::second_order);
    CHECK(forced.example == Example::second_order);
    CHECK(forced.x0.size() == 2);
}

TEST_CASE("config round trip is lossless") {
    for (const auto example : {Example::second_order, Example::unicycle}) {
        auto c = default_config(example);
        c.weights.c1 = 0.1;
        c.gamma = 1.0 / 3.0;
        c.observer.Q = SymmetricMatrix(c.observer.Q.matrix() * (2.0 / 7.0));
        c.theory = TheoryConstants{1.1, 0.3, 0.7, 1.0 / 9.0};
        c.weights.metric = ConfidenceMetric::log_determinant;
        const auto again = round_trip(c);
        CHECK(serialize_config(again) == serialize_config(c));
        CHECK(config_hash(again) == config_hash(c));
        CHECK(again.gamma == c.gamma);
        CHECK(again.observer.Q.matrix() == c.observer.Q.matrix());
        REQUIRE(again.theory.has_value());
        CHECK(again.theory->K_h == c.theory->K_h);
    }
    auto d = default_config(Example::second_order);
    auto e = d;
    e.weights.c1 = 1000.0;
    CHECK(config_hash(d) != config_hash(e));
    CHECK(config_hash(d).size() == 16);
}

TEST_CASE("every serialized key is documented") {
    const auto kv = parse(serialize_config(default_config(Example::unicycle)));
    const auto& schema = config_schema();
    CHECK(kv.size() == schema.size());
    for (const auto& [key, value] : kv) {
        const bool documented = std::any_of(schema.begin(), schema.end(), [&](const ConfigKeyDoc& d) {
            return d.key == key && !d.description.empty();
        });
        CHECK_MESSAGE(documented, key);
    }
}

TEST_CASE("doubles use 17 significant digits") {
    for (const double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 1e-300}) {
        const std::string s = format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
}

TEST_CASE("trajectory csv re-parses with the episode shape") {
    auto c = default_config(Example::unicycle);
    c.t_final = 2.0;
    c.seed = 11;
    const auto log = run_episode(c);
    std::stringstream buffer;
    write_trajectory_csv(buffer, log);
    const auto table = read_trajectory_csv(buffer);

    CHECK(table.header == csv_header(3, 2));
    CHECK(table.header.size() == 1 + 3 + 3 + 2 + 1 + 3 + 4 + 2);
    CHECK(table.rows.size() == log.rows.size());
    for (const auto& row : table.rows)
        REQUIRE(row.size() == table.header.size());
    CHECK(table.metadata.at("seed") == "11");
    CHECK(table.metadata.at("config_hash") == log.config_hash);
    CHECK(table.metadata.at("artifact_version") == kArtifactVersion);
    CHECK(std::strtod(table.metadata.at("disturbance_sample").c_str(), nullptr) == *log.disturbance_sample);

    const auto col = table.column("xhat2");
    REQUIRE(col >= 0);
    for (std::size_t i = 0; i < log.rows.size(); i += 97)
        CHECK(std::strtod(table.rows[i][static_cast<std::size_t>(col)].c_str(), nullptr) == log.rows[i].xhat(2));
    CHECK(table.column("V_true") >= 0);
    CHECK(table.rows[0][static_cast<std::size_t>(table.column("V_true"))] == "nan");
    CHECK(table.rows[5][static_cast<std::size_t>(table.column("solver_status"))] == "optimal");
    CHECK(table.column("nonexistent") == -1);
}

TEST_CASE("ragged csv is rejected") {
    std::istringstream in("# seed: 1\nt,x0\n0,1\n0.1\n");
    CHECK_THROWS_AS((void)read_trajectory_csv(in), std::runtime_error);
}

TEST_CASE("metrics summary lines") {
    auto c = default_config(Example::second_order);
    c.t_final = 1.0;
    const auto log = run_episode(c);
    std::ostringstream out;
    write_metrics(out, compute_metrics(log), log);
    const auto kv = parse(out.str());
    const auto value = [&](const std::string& key) {
        for (const auto& [k, v] : kv)
            if (k == key)
                return v;
        FAIL("missing key " << key);
        return std::string();
    };
    CHECK(value("termination") == "completed");
    CHECK(value("config_hash") == log.config_hash);
    CHECK(std::strtod(value("min_h_true").c_str(), nullptr) == compute_metrics(log).min_h_true);
}

TEST_CASE("shipped config files load") {
    const std::string dir = CONFSAFE_CONFIG_DIR;
    auto so = load_config_file(dir + "/second_order.cfg");
    auto expected = default_config(Example::second_order);
    expected.weights.c1 = 1000.0;
    CHECK(serialize_config(so) == serialize_config(expected));

    auto uni = load_config_file(dir + "/unicycle.cfg", {{"seed", "0"}});
    auto expected_uni = default_config(Example::unicycle);
    expected_uni.weights.c1 = 1000.0;
    CHECK(serialize_config(uni) == serialize_config(expected_uni));
}
