// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <json.hpp>

#include "revolver/bench.hpp"
#include "revolver/errors.hpp"
#include "revolver/jobs.hpp"
#include "revolver/matmul.hpp"
#include "revolver/mnist.hpp"
#include "revolver/model.hpp"
#include "revolver/oracle.hpp"
#include "support.hpp"

using namespace revolver;

namespace {

struct Workspace {
    rvtest::TempDir dir{"jobs"};
    std::vector<Matrix> images;
    ModelWeights weights = random_weights(5);
    JobConfig cfg;

    explicit Workspace(std::size_t count) {
        images = rvtest::pixel_images(count);
        write_idx_images(dir.path / "images.idx", images);
        save_weights_csv(dir.path / "weights", weights);
    }
    std::filesystem::path operator/(const char *name) const { return dir.path / name; }
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path &p) {
    std::vector<nlohmann::json> out;
    std::ifstream in(p);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

}  // namespace

TEST_CASE("owner-encode splits images into batches of 32") {
    Workspace ws(33);
    const auto one = owner_encode(ws / "images.idx", ws / "one", ws.cfg, 32);
    REQUIRE(one.size() == 1);
    CHECK(one[0].filename() == "batch_00000.SIMULATED.ct");
    const auto two = owner_encode(ws / "images.idx", ws / "two", ws.cfg);
    REQUIRE(two.size() == 2);
    CHECK(two[1].filename() == "batch_00001.SIMULATED.ct");

    // count 0, 28 x 28
    std::ofstream(ws / "empty.idx", std::ios::binary)
        .write("\x00\x00\x08\x03\x00\x00\x00\x00\x00\x00\x00\x1c\x00\x00\x00\x1c", 16);
    CHECK_THROWS_AS(owner_encode(ws / "empty.idx", ws / "none", ws.cfg), PreconditionError);
    write_idx_images(ws / "small.idx", rvtest::pixel_images(2, 8));
    CHECK_THROWS_AS(owner_encode(ws / "small.idx", ws / "none", ws.cfg), IngestError);

    JobConfig odd;
    odd.stride = 512;
    CHECK_THROWS_AS(odd.validate(), PreconditionError);
}

TEST_CASE("job config reads engine keys and stride") {
    rvtest::TempDir dir("cfg");
    std::ofstream(dir.path / "c.json") << R"({"slots": 65536, "stride": 2048})";
    const JobConfig cfg = JobConfig::load(dir.path / "c.json");
    CHECK(cfg.params.slots == 65536);
    CHECK(cfg.stride == 2048);
    std::ofstream(dir.path / "bad.json") << R"({"slots": 1000})";
    CHECK_THROWS_AS(JobConfig::load(dir.path / "bad.json"), PreconditionError);
    std::ofstream(dir.path / "broken.json") << "{";
    CHECK_THROWS_AS(JobConfig::load(dir.path / "broken.json"), IngestError);
}

TEST_CASE("provider-encode writes the full model") {
    Workspace ws(1);
    CHECK(provider_encode_job(ws / "weights", ws / "model.SIMULATED.rvm", ws.cfg) == 52);
    CHECK(std::filesystem::exists(ws / "model.SIMULATED.rvm"));
    std::filesystem::remove(ws / "weights" / "act2.csv");
    CHECK_THROWS_AS(provider_encode_job(ws / "weights", ws / "m2.rvm", ws.cfg), IngestError);
}

TEST_CASE("cloud-infer end to end, serial and parallel") {
    Workspace ws(40);
    const auto batches = owner_encode(ws / "images.idx", ws / "batches", ws.cfg);
    provider_encode_job(ws / "weights", ws / "model.rvm", ws.cfg);

    InferOptions opt;
    opt.batches = batches;
    opt.model = ws / "model.rvm";
    opt.predictions = ws / "serial.jsonl";
    opt.report = ws / "report.json";
    opt.verify = true;
    opt.oracle_weights = ws / "weights";
    const InferSummary s = cloud_infer(opt, ws.cfg);
    CHECK(s.records == 40);
    CHECK(s.batches == 2);
    CHECK(s.verified);
    CHECK(s.max_abs_error < 1e-6);
    CHECK(s.max_depth == kPipelineDepth);

    const auto recs = read_jsonl(opt.predictions);
    REQUIRE(recs.size() == 40);
    const Matrix oracle = oracle_forward(ws.weights, ws.images);
    const auto labels = argmax_rows(oracle);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(recs[i]["index"] == i);
        CHECK(recs[i]["scores"].size() == kClasses);
        CHECK(recs[i]["label"].get<int>() == labels[i]);
    }
    std::ifstream rin(opt.report);
    const auto report = nlohmann::json::parse(rin);
    CHECK(report["simulated"] == true);
    CHECK(report["records"] == 40);
    CHECK(report["model_ciphertexts"] == 52);
    CHECK(report["max_depth"] == kPipelineDepth);
    CHECK(report["verification"]["passed"] == true);
    CHECK(report["stages"]["conv"]["rot"].get<int>() > 0);

    opt.parallel = 2;
    opt.predictions = ws / "parallel.jsonl";
    opt.report.clear();
    const InferSummary p = cloud_infer(opt, ws.cfg);
    CHECK(read_jsonl(opt.predictions) == recs);
    CHECK(p.total == s.total);

    CHECK(verify_predictions(ws / "serial.jsonl", ws / "weights", ws / "images.idx").records == 40);
}

TEST_CASE("verification catches a wrong model") {
    Workspace ws(4);
    const auto batches = owner_encode(ws / "images.idx", ws / "batches", ws.cfg);
    provider_encode_job(ws / "weights", ws / "model.rvm", ws.cfg);
    save_weights_csv(ws / "other", random_weights(99));

    InferOptions opt;
    opt.batches = batches;
    opt.model = ws / "model.rvm";
    opt.predictions = ws / "pred.jsonl";
    opt.verify = true;
    opt.oracle_weights = ws / "other";
    CHECK_THROWS_AS(cloud_infer(opt, ws.cfg), VerificationError);
    CHECK(read_jsonl(opt.predictions).size() == 4);  // outputs are still written
    CHECK_THROWS_AS(verify_predictions(opt.predictions, ws / "other", ws / "images.idx"), VerificationError);
    CHECK(verify_predictions(opt.predictions, ws / "weights", ws / "images.idx").records == 4);

    std::ofstream(ws / "tampered.jsonl") << R"({"index": 0, "label": 0, "scores": [0,0,0,0,0,0,0,0,0,0]})" << '\n';
    CHECK_THROWS_AS(verify_predictions(ws / "tampered.jsonl", ws / "weights", ws / "images.idx"), VerificationError);
    std::ofstream(ws / "junk.jsonl") << "{nope\n";
    CHECK_THROWS_AS(verify_predictions(ws / "junk.jsonl", ws / "weights", ws / "images.idx"), IngestError);

    opt.oracle_weights.clear();
    CHECK_THROWS_AS(cloud_infer(opt, ws.cfg), PreconditionError);
    JobConfig small;
    small.params.slots = 16384;
    opt.verify = false;
    CHECK_THROWS_AS(cloud_infer(opt, small), IngestError);
}

TEST_CASE("bench stays within its documented bounds") {
    const BenchGrid grid = BenchGrid::standard();
    const auto rows = run_bench(grid);
    std::size_t fast = 0;
    for (const auto &[m, n, p] : grid.matmul) fast += MatmulPlan::make(m, n, p, grid.slots).fast_path;
    CHECK(rows.size() == 4 * (grid.matmul.size() + fast + grid.conv.size()));
    for (const CostRow &r : rows) {
        INFO(r.algo << " " << r.scenario << " step " << r.step);
        CHECK_FALSE(r.exceeds);
    }
    const auto j = nlohmann::json::parse(cost_table_json(rows));
    CHECK(j.size() == rows.size());
    CHECK(format_cost_table(rows).find("OVER") == std::string::npos);
}
