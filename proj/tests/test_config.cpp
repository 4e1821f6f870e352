// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "graphfree/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace graphfree;

namespace {

std::string write_temp(const std::string &name, const std::string &body) {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << body;
    return path;
}

} // namespace

TEST_CASE("defaults are present and typed") {
    run_config cfg;
    CHECK(cfg.get_string("dataset.feature_mode") == "one_hot_label");
    CHECK(cfg.get_double("dataset.split_ratio") == 0.7);
    CHECK(cfg.get_string("teacher.arch") == "GCN-5-64");
    CHECK(cfg.get_int("teacher.epochs") == 400);
    CHECK(cfg.get_string("generate.method") == "gfkd");
    CHECK(cfg.get_double("generate.ratio") == 1.0);
    CHECK(cfg.get_double("generate.lambda_bn") == 1.0);
    CHECK(cfg.get_int("generate.iterations") == 2500);
    CHECK(cfg.get_bool("generate.learn_diagonal"));
    CHECK(cfg.get_string("distill.student_arch") == "GCN-3-32");
    CHECK(cfg.get_double("distill.tau") == 2.0);
    CHECK(cfg.get_u64_list("distill.seeds") == std::vector<uint64_t>{1, 2, 3});
    CHECK_FALSE(cfg.get_bool("distill.use_real_data"));
    CHECK(cfg.get_string("output.dir") == "out");
    CHECK(cfg.get_int("verify.n_draws") == 200000);

    CHECK_THROWS_AS(cfg.get_string("dataset.nope"), error);
    CHECK_THROWS_AS(cfg.get_int("teacher.arch"), error);   // type mismatch
    CHECK_THROWS_AS(cfg.get_string("nosection.key"), error);
}

TEST_CASE("set applies typed dotted overrides") {
    run_config cfg;
    cfg.set("teacher.epochs=25");
    CHECK(cfg.get_int("teacher.epochs") == 25);
    cfg.set("generate.lambda_bn", "0.25");
    CHECK(cfg.get_double("generate.lambda_bn") == 0.25);
    cfg.set("output.verbose=true");
    CHECK(cfg.get_bool("output.verbose"));
    cfg.set("dataset.name=MUTAG");  // bare string value
    CHECK(cfg.get_string("dataset.name") == "MUTAG");
    cfg.set("distill.seeds=[4,5]");
    CHECK(cfg.get_u64_list("distill.seeds") == std::vector<uint64_t>{4, 5});
    // Integer into a double slot widens cleanly.
    cfg.set("distill.tau=4");
    CHECK(cfg.get_double("distill.tau") == 4.0);

    CHECK_THROWS_AS(cfg.set("teacher.mystery=1"), error);        // unknown key
    CHECK_THROWS_AS(cfg.set("teacher.epochs=soon"), error);      // type mismatch
    CHECK_THROWS_AS(cfg.set("teacher=3"), error);                // section target
    CHECK_THROWS_AS(cfg.set("teacher.epochs"), error);           // missing '='
    CHECK_THROWS_AS(cfg.set("generate.seed={\"a\":1}"), error);  // object value
}

TEST_CASE("file merge respects precedence and validation") {
    run_config cfg;
    const std::string path = write_temp("graphfree_cfg_test.json",
                                        R"({"teacher": {"epochs": 50, "lr": 0.005},
                                            "dataset": {"name": "MUTAG"}})");
    cfg.load_file(path);
    CHECK(cfg.get_int("teacher.epochs") == 50);
    CHECK(cfg.get_double("teacher.lr") == 0.005);
    CHECK(cfg.get_string("dataset.name") == "MUTAG");
    CHECK(cfg.get_int("teacher.batch_size") == 32);  // untouched default

    // Overrides beat the file.
    cfg.set("teacher.epochs=75");
    CHECK(cfg.get_int("teacher.epochs") == 75);

    const std::string bad_key = write_temp("graphfree_cfg_badkey.json",
                                           R"({"teacher": {"epoch": 50}})");
    run_config c2;
    CHECK_THROWS_AS(c2.load_file(bad_key), error);

    const std::string bad_type = write_temp("graphfree_cfg_badtype.json",
                                            R"({"teacher": {"epochs": "many"}})");
    CHECK_THROWS_AS(c2.load_file(bad_type), error);

    const std::string bad_json = write_temp("graphfree_cfg_badjson.json", "{nope");
    CHECK_THROWS_AS(c2.load_file(bad_json), error);
    CHECK_THROWS_AS(c2.load_file("/nonexistent/config.json"), error);

    namespace fs = std::filesystem;
    for (const auto &p : {path, bad_key, bad_type, bad_json}) fs::remove(p);
}

TEST_CASE("frozen output parses back to the effective config") {
    run_config cfg;
    cfg.set("teacher.epochs=33");
    const std::string text = cfg.frozen();
    CHECK(text.back() == '\n');
    nlohmann::json parsed = nlohmann::json::parse(text);
    CHECK(parsed["teacher"]["epochs"] == 33);
    CHECK(parsed["generate"]["method"] == "gfkd");
}

TEST_CASE("dataset_path resolves against the data root variable") {
    run_config cfg;
    cfg.set("dataset.path=corpus/MUTAG");

    ::setenv("GRAPHFREE_DATA_ROOT", "/srv/data", 1);
    CHECK(cfg.dataset_path() == "/srv/data/corpus/MUTAG");
    ::unsetenv("GRAPHFREE_DATA_ROOT");
    CHECK(cfg.dataset_path() == "corpus/MUTAG");

    // Absolute paths pass through even with the variable set.
    ::setenv("GRAPHFREE_DATA_ROOT", "/srv/data", 1);
    cfg.set("dataset.path=/abs/MUTAG");
    CHECK(cfg.dataset_path() == "/abs/MUTAG");
    ::unsetenv("GRAPHFREE_DATA_ROOT");
}
