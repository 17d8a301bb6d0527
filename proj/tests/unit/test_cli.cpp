/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tracelab/cli.hpp"
#include "tracelab/error.hpp"
#include "tracelab/runconfig.hpp"

using namespace tracelab;
namespace fs = std::filesystem;

namespace {

const std::string kToy = TRACELAB_SOURCE_DIR "/configs/toy-sparse.json";

class Workdir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("tracelab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("NP_SEED");
        unsetenv("NP_OUT");
    }
    void TearDown() override {
        unsetenv("NP_SEED");
        unsetenv("NP_OUT");
        fs::remove_all(dir_);
    }

    fs::path write_config(const std::string& name, const std::string& body) {
        const auto p = dir_ / name;
        std::ofstream(p) << body;
        return p;
    }

    fs::path baseline_config(const std::string& attack) {
        return write_config("run.json", "{\n  \"network\": \"" + kToy + "\",\n  \"seed\": 3,\n  \"out\": \"" +
                                            (dir_ / "out").string() + "\",\n  \"scenario\": \"baseline\",\n" +
                                            "  \"attack\": " + attack + "\n}\n");
    }

    int run(std::vector<std::string> args) {
        std::vector<const char*> argv{"tracelab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        out_.str({});
        err_.str({});
        return run_cli(int(argv.size()), argv.data(), out_, err_);
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        std::stringstream s;
        s << f.rdbuf();
        return s.str();
    }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(Workdir, SimulateWritesTracesAndTruth) {
    auto cfg = baseline_config(R"({"pipeline": "ss", "expect": "broken"})");
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), exit_ok) << err_.str();
    EXPECT_TRUE(fs::exists(dir_ / "out" / "traces" / "run_00000.csv"));
    auto sim = json::parse(slurp(dir_ / "out" / "simulate.json"));
    auto truth = json::parse(slurp(dir_ / "out" / "truth.json"));
    EXPECT_EQ(sim["config_hash"], truth["config_hash"]);
    EXPECT_EQ(sim["config_hash"].get<std::string>().size(), 16u);
    std::ifstream trace(dir_ / "out" / "traces" / "run_00000.csv");
    std::string header;
    std::getline(trace, header);
    EXPECT_EQ(header, "op,addr,size,t,digest");
}

TEST_F(Workdir, AttackExitCodeFollowsExpectation) {
    auto cfg = baseline_config(R"({"pipeline": "ss", "expect": "broken"})");
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), exit_ok);
    EXPECT_EQ(run({"attack", "--config", cfg.string()}), exit_ok) << err_.str();
    EXPECT_NE(out_.str().find("broken"), std::string::npos);
    auto held = baseline_config(R"({"pipeline": "ss", "expect": "held"})");
    EXPECT_EQ(run({"attack", "--config", held.string()}), exit_expectation);
    EXPECT_EQ(run({"attack", "--config", held.string(), "--format", "csv"}), exit_expectation);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "attack.csv"));
}

TEST_F(Workdir, AttackWithoutTracesIsConfigError) {
    auto cfg = baseline_config(R"({"pipeline": "ss"})");
    EXPECT_EQ(run({"attack", "--config", cfg.string()}), exit_config);
    EXPECT_NE(err_.str().find("simulate"), std::string::npos);
}

TEST_F(Workdir, BadFlagsAndConfigsExitTwo) {
    EXPECT_EQ(run({"simulate"}), exit_config);
    EXPECT_EQ(run({"bogus", "--config", "x.json"}), exit_config);
    EXPECT_EQ(run({"simulate", "--config", (dir_ / "missing.json").string()}), exit_config);
    auto cfg = baseline_config(R"({"pipeline": "ss"})");
    EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--format", "xml"}), exit_config);
    auto bad = write_config("bad.json", "{\n  \"network\": \"" + kToy + "\",\n  \"sede\": 3\n}\n");
    EXPECT_EQ(run({"simulate", "--config", bad.string()}), exit_config);
    EXPECT_NE(err_.str().find("line 3"), std::string::npos) << err_.str();
    EXPECT_NE(err_.str().find("sede"), std::string::npos);
}

TEST_F(Workdir, SameSeedSameBytes) {
    auto cfg = write_config("np.json", "{\"network\": \"" + kToy + "\", \"scenario\": \"neuroplug\", \"runs\": 3, " +
                                           "\"neuroplug\": {\"bin_size\": 4096, \"alpha\": 256, \"support_R\": 512, " +
                                           "\"sigma2_max\": 65536}}");
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--seed", "5", "--out", (dir_ / "a").string()}), exit_ok)
        << err_.str();
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--seed", "5", "--out", (dir_ / "b").string()}), exit_ok);
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--seed", "6", "--out", (dir_ / "c").string()}), exit_ok);
    for (const char* f : {"traces/run_00000.csv", "traces/run_00002.csv", "bins.csv", "binpack.json", "truth.json"})
        EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
    auto manifest = [&](const char* d) {
        auto j = json::parse(slurp(dir_ / d / "simulate.json"));
        j["config"].erase("out");
        return j;
    };
    EXPECT_EQ(manifest("a"), manifest("b"));
    EXPECT_NE(manifest("a"), manifest("c"));
}

TEST_F(Workdir, EnvironmentOverrides) {
    auto cfg = baseline_config(R"({"pipeline": "ss"})");
    setenv("NP_OUT", (dir_ / "env").string().c_str(), 1);
    setenv("NP_SEED", "11", 1);
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), exit_ok) << err_.str();
    auto sim = json::parse(slurp(dir_ / "env" / "simulate.json"));
    EXPECT_EQ(sim["config"]["seed"], 11);
    // Flags win over the environment.
    ASSERT_EQ(run({"simulate", "--config", cfg.string(), "--seed", "12", "--out", (dir_ / "flag").string()}),
              exit_ok);
    EXPECT_EQ(json::parse(slurp(dir_ / "flag" / "simulate.json"))["config"]["seed"], 12);
    setenv("NP_SEED", "-4", 1);
    EXPECT_EQ(run({"simulate", "--config", cfg.string()}), exit_config);
    setenv("NP_SEED", "abc", 1);
    EXPECT_THROW(env_overrides(), ConfigError);
}

TEST_F(Workdir, ReportMarksStaleArtifacts) {
    auto cfg = baseline_config(R"({"pipeline": "ss"})");
    EXPECT_EQ(run({"report", "--config", cfg.string()}), exit_config);
    ASSERT_EQ(run({"simulate", "--config", cfg.string()}), exit_ok);
    ASSERT_EQ(run({"attack", "--config", cfg.string()}), exit_ok);
    ASSERT_EQ(run({"report", "--config", cfg.string()}), exit_ok);
    auto rep = json::parse(slurp(dir_ / "out" / "report.json"));
    ASSERT_EQ(rep["artifacts"].size(), 2u);
    for (const auto& a : rep["artifacts"]) EXPECT_EQ(a["status"], "current");
    ASSERT_EQ(run({"report", "--config", cfg.string(), "--seed", "99", "--format", "csv"}), exit_ok);
    EXPECT_NE(slurp(dir_ / "out" / "report.md").find("stale"), std::string::npos);
}

TEST(RunConfig, HashIgnoresOutputLocation) {
    json doc = {{"network", kToy}, {"seed", 2}};
    auto a = parse_run_config(doc);
    Overrides ov;
    ov.out = "/tmp/elsewhere";
    auto b = parse_run_config(doc, ov);
    EXPECT_EQ(a.hash, b.hash);
    ov.seed = 3;
    EXPECT_NE(parse_run_config(doc, ov).hash, a.hash);
    EXPECT_EQ(parse_run_config(doc, ov).seed, 3u);
}

TEST(RunConfig, RejectsUnknownAndInvalidValues) {
    EXPECT_THROW(parse_run_config(json{{"seed", 1}}), ConfigError);
    EXPECT_THROW(parse_run_config(json{{"network", kToy}, {"runs", 0}}), ConfigError);
    EXPECT_THROW(parse_run_config(json{{"network", kToy}, {"scenario", "magic"}}), ConfigError);
    EXPECT_THROW(parse_run_config(json{{"network", kToy}, {"trace", {{"format", "xml"}}}}), ConfigError);
    EXPECT_THROW(parse_run_config(json{{"network", kToy}, {"attack", {{"pipeline", "ss"}, {"layers", {9}}}}}),
                 ConfigError);
    EXPECT_THROW(parse_run_config(json{{"network", kToy}, {"neuroplug", {{"bin_sise", 10}}}}), ConfigError);
}

TEST(RunConfig, ShippedRunConfigsParse) {
    for (const auto& e : fs::directory_iterator(TRACELAB_SOURCE_DIR "/configs/runs")) {
        EXPECT_NO_THROW(load_run_config(e.path())) << e.path();
    }
}

TEST(RunConfig, ErrorsNameTheLine) {
    const std::string raw = "{\n  \"network\": \"" + kToy + "\",\n  \"runs\": 1,\n  \"trace\": {\n    \"colour\": 1\n  }\n}\n";
    try {
        parse_run_config(json::parse(raw), {}, raw);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
}
