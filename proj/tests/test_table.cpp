// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "loopcluster/table.hpp"

namespace loopcluster {
namespace {

Table sample_table() {
    Table t{{"phi", "n", "label", "ok"}, {}, {}};
    t.meta.emplace_back("command", std::string("demo"));
    t.meta.emplace_back("M", 0.77);
    t.add_row({0.1, std::int64_t{2}, std::string("a,b"), true});
    t.add_row({1.0 / 3.0, std::int64_t{3}, std::string("plain"), false});
    return t;
}

std::string render(const Table& t, Format f) {
    std::ostringstream os;
    write_table(os, t, f);
    return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

TEST(Table, CsvLayout) {
    EXPECT_EQ(render(sample_table(), Format::kCsv),
              "# command=demo\n# M=0.77\nphi,n,label,ok\n0.1,2,\"a,b\",true\n0.333333333333,3,plain,false\n");
}

TEST(Table, JsonEnvelope) {
    const auto doc = nlohmann::json::parse(render(sample_table(), Format::kJson));
    EXPECT_EQ(doc["schema"], 1);
    EXPECT_EQ(doc["meta"]["command"], "demo");
    ASSERT_EQ(doc["rows"].size(), 2U);
    EXPECT_EQ(doc["rows"][0]["label"], "a,b");
    EXPECT_EQ(doc["rows"][1]["n"], 3);
    EXPECT_EQ(doc["rows"][1]["phi"].get<double>(), round12(1.0 / 3.0));
    EXPECT_EQ(doc["rows"][0]["ok"], true);
}

TEST(Table, EmptyRefused) {
    Table t{{"a"}, {}, {}};
    EXPECT_THROW(render(t, Format::kCsv), EmptyDataError);
    EXPECT_THROW(emit_table(t, Format::kJson, "/tmp/never_written.json"), EmptyDataError);
    EXPECT_THROW(t.add_row({1.0, 2.0}), ArgumentError);
    EXPECT_THROW(parse_format("xml"), ArgumentError);
}

TEST(Table, CsvRoundTrip) {
    // 12 significant digits bound the relative error by 5e-12.
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-30, 30);
    Table t{{"x"}, {}, {}};
    std::vector<double> xs;
    for (int i = 0; i < 2000; ++i) {
        xs.push_back(std::ldexp(mant(rng), expo(rng)));
        t.add_row({xs.back()});
    }
    std::istringstream in(render(t, Format::kCsv));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x");
    for (double x : xs) {
        ASSERT_TRUE(std::getline(in, line));
        const double back = std::stod(split_csv_line(line).at(0));
        ASSERT_LE(std::abs(back - x), 5e-12 * std::abs(x)) << line;
        ASSERT_EQ(back, round12(x));
    }
}

TEST(Table, CsvFieldsSurviveQuoting) {
    Table t{{"s"}, {}, {}};
    t.add_row({std::string("say \"hi\", twice")});
    std::istringstream in(render(t, Format::kCsv));
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(split_csv_line(line).at(0), "say \"hi\", twice");
}

TEST(Table, EmitIsByteIdentical) {
    const auto dir = std::filesystem::temp_directory_path() / "loopcluster_table_test";
    std::filesystem::create_directories(dir);
    for (Format f : {Format::kCsv, Format::kJson}) {
        const std::string a = (dir / "a.out").string(), b = (dir / "b.out").string();
        emit_table(sample_table(), f, a);
        emit_table(sample_table(), f, b);
        std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
        EXPECT_FALSE(sa.empty());
        EXPECT_EQ(sa, sb);
        EXPECT_EQ(sa, render(sample_table(), f));
    }
    std::filesystem::remove_all(dir);
}

TEST(Table, UnwritablePathNamesThePath) {
    const std::string path = "/nonexistent_dir_for_loopcluster/x.csv";
    try {
        emit_table(sample_table(), Format::kCsv, path);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find(path), std::string::npos);
    }
}

TEST(Table, OutputDirectoryFromEnvironment) {
    const auto dir = std::filesystem::temp_directory_path() / "loopcluster_env_dir";
    std::filesystem::create_directories(dir);
    ::setenv(kOutputDirEnv, dir.c_str(), 1);
    EXPECT_EQ(resolve_output_path("t.csv"), dir / "t.csv");
    EXPECT_EQ(resolve_output_path("/abs/t.csv"), std::filesystem::path("/abs/t.csv"));
    emit_table(sample_table(), Format::kCsv, "t.csv");
    EXPECT_TRUE(std::filesystem::exists(dir / "t.csv"));
    ::unsetenv(kOutputDirEnv);
    EXPECT_EQ(resolve_output_path("t.csv"), std::filesystem::path("t.csv"));
    std::filesystem::remove_all(dir);
}

TEST(Table, NonFiniteBecomesNullInJson) {
    Table t{{"x"}, {}, {}};
    t.add_row({std::numeric_limits<double>::infinity()});
    const auto doc = nlohmann::json::parse(render(t, Format::kJson));
    EXPECT_TRUE(doc["rows"][0]["x"].is_null());
}

}  // namespace
}  // namespace loopcluster
