// End-to-end coverage of the two binaries: every subcommand is exercised
// through a real process with a real dataset on disk.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

// Value of a "key = value" line in a command's stdout.
std::string printed(const std::string& text, const std::string& key) {
    for (const std::string& line : lines_of(text)) {
        const std::string prefix = key + " = ";
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    }
    return {};
}

// Shared scratch area: one synthetic dataset and one fitted model reused by
// every case, so the suite pays for a single fit.
struct CliFixture {
    fs::path root;
    std::string data;
    std::string model;
    std::string cfg; // override flags shared by every command
    std::string fit_stdout;

    RunResult run(const std::string& argv_tail) const {
        const fs::path out_file = root / "cmd.out";
        const fs::path err_file = root / "cmd.err";
        const std::string full =
            argv_tail + " > \"" + out_file.string() + "\" 2> \"" + err_file.string() + "\"";
        const int raw = std::system(full.c_str());
        RunResult r;
        r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
        r.out = slurp(out_file);
        r.err = slurp(err_file);
        return r;
    }
    RunResult ph2(const std::string& argv_tail) const {
        return run(std::string("\"") + PH2_CLI_PATH + "\" " + argv_tail);
    }

    CliFixture() {
        root = fs::temp_directory_path() / ("ph2_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        data = (root / "data").string();
        model = (root / "model.ph2").string();
        cfg = "--set num_hops=2 --set k_per_hop=16,8 --set points_per_hop=192,96 "
              "--set energy_threshold=0.01 --seed 7";

        RunResult synth = run(std::string("\"") + PH2_SYNTH_PATH + "\" --out \"" + data +
                              "\" --train 10 --test 5 --points 192 --noise 0.01 --seed 3");
        REQUIRE_MESSAGE(synth.code == 0, synth.err);

        RunResult fit =
            ph2("fit --data \"" + data + "\" --model \"" + model + "\" " + cfg);
        REQUIRE_MESSAGE(fit.code == 0, fit.err);
        fit_stdout = fit.out;
    }
    ~CliFixture() {
        std::error_code ec;
        fs::remove_all(root, ec);
    }
};

const CliFixture& fixture() {
    static CliFixture f;
    return f;
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("the generator lays out split/class/sample directories") {
    const CliFixture& f = fixture();
    const std::vector<std::string> classes{"cross", "cube", "sphere", "torus"};
    for (const std::string split : {"train", "test"}) {
        const std::size_t expect = split == "train" ? 10 : 5;
        for (const std::string& cls : classes) {
            const fs::path dir = fs::path(f.data) / split / cls;
            REQUIRE_MESSAGE(fs::is_directory(dir), dir.string());
            std::size_t count = 0;
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().extension() == ".xyz") ++count;
            CHECK(count == expect);
        }
    }
}

TEST_CASE("fit reports the tree shape and saves the container") {
    const CliFixture& f = fixture();
    CHECK(std::stoul(printed(f.fit_stdout, "leaf_count")) > 0);
    CHECK(std::stoul(printed(f.fit_stdout, "feature_dim")) ==
          2 * std::stoul(printed(f.fit_stdout, "leaf_count")));
    CHECK(std::abs(std::stod(printed(f.fit_stdout, "leaf_energy_sum")) - 1.0) < 1e-6);
    CHECK(printed(f.fit_stdout, "model") == f.model);
    CHECK(fs::exists(f.model));
    CHECK(fs::exists(f.model + ".manifest"));
}

TEST_CASE("refitting with the same seed reproduces the container byte for byte") {
    const CliFixture& f = fixture();
    const std::string second = (f.root / "model_again.ph2").string();
    RunResult fit = f.ph2("fit --data \"" + f.data + "\" --model \"" + second + "\" " + f.cfg);
    REQUIRE_MESSAGE(fit.code == 0, fit.err);

    std::ifstream a(f.model, std::ios::binary), b(second, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)),
                              std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)),
                              std::istreambuf_iterator<char>());
    CHECK(bytes_a.size() > 0);
    CHECK(bytes_a == bytes_b);
    CHECK(slurp(f.model + ".manifest") == slurp(second + ".manifest"));
}

TEST_CASE("an energy threshold of one keeps only the first-stage channels") {
    const CliFixture& f = fixture();
    const std::string path = (f.root / "model_t1.ph2").string();
    RunResult fit = f.ph2("fit --data \"" + f.data + "\" --model \"" + path +
                          "\" --set num_hops=2 --set k_per_hop=16,8 "
                          "--set points_per_hop=192,96 --set energy_threshold=1.0 --seed 7");
    REQUIRE_MESSAGE(fit.code == 0, fit.err);
    CHECK(printed(fit.out, "leaf_count") == "24");
    CHECK(printed(fit.out, "feature_dim") == "48");
}

TEST_CASE("eval prints both accuracies and writes the confusion csv") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "confusion.csv").string();
    RunResult eval = f.ph2("eval --data \"" + f.data + "\" --model \"" + f.model +
                           "\" --split test --out \"" + csv + "\"");
    REQUIRE_MESSAGE(eval.code == 0, eval.err);
    CHECK(printed(eval.out, "split") == "test");
    const double overall = std::stod(printed(eval.out, "overall_accuracy"));
    const double class_avg = std::stod(printed(eval.out, "class_avg_accuracy"));
    CHECK(overall >= 0.0);
    CHECK(overall <= 1.0);
    CHECK(class_avg >= 0.0);
    CHECK(class_avg <= 1.0);

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 1 + 4 * 4);
    CHECK(rows[0] == "true,pred,count");
    long long total = 0, diag = 0;
    const std::set<std::string> classes{"cross", "cube", "sphere", "torus"};
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::vector<std::string> cells = split_csv(rows[i]);
        REQUIRE(cells.size() == 3);
        CHECK(classes.count(cells[0]) == 1);
        CHECK(classes.count(cells[1]) == 1);
        const long long n = std::stoll(cells[2]);
        CHECK(n >= 0);
        total += n;
        if (cells[0] == cells[1]) diag += n;
    }
    CHECK(total == 4 * 5);
    CHECK(std::abs(static_cast<double>(diag) / total - overall) < 1e-6);
}

TEST_CASE("predict labels standalone files with the stored class names") {
    const CliFixture& f = fixture();
    const std::string input = (fs::path(f.data) / "train" / "sphere" / "0000.xyz").string();
    RunResult pred = f.ph2("predict --model \"" + f.model + "\" \"" + input + "\"");
    REQUIRE_MESSAGE(pred.code == 0, pred.err);
    const std::vector<std::string> rows = lines_of(pred.out);
    REQUIRE(rows.size() == 1);
    std::stringstream ss(rows[0]);
    std::string path, name;
    int label = -1;
    ss >> path >> label >> name;
    CHECK(path == input);
    CHECK(label >= 0);
    CHECK(label < 4);
    const std::set<std::string> classes{"cross", "cube", "sphere", "torus"};
    CHECK(classes.count(name) == 1);
}

TEST_CASE("rank writes one scored row per feature column") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "rank.csv").string();
    RunResult rank = f.ph2("rank --data \"" + f.data + "\" --model \"" + f.model +
                           "\" --out \"" + csv + "\"");
    REQUIRE_MESSAGE(rank.code == 0, rank.err);
    const std::size_t dim = std::stoul(printed(f.fit_stdout, "feature_dim"));
    CHECK(std::stoul(printed(rank.out, "columns")) == dim);

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 1 + dim);
    CHECK(rows[0] == "node_id,aggregation,energy,cross_entropy,rank_ce,rank_energy");
    std::set<unsigned long> ce_ranks, energy_ranks;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::vector<std::string> cells = split_csv(rows[i]);
        REQUIRE(cells.size() == 6);
        CHECK((cells[1] == "mean" || cells[1] == "max"));
        CHECK(std::stod(cells[2]) >= 0.0);
        CHECK(std::stod(cells[3]) >= 0.0);
        ce_ranks.insert(std::stoul(cells[4]));
        energy_ranks.insert(std::stoul(cells[5]));
    }
    // Both rank columns are permutations of 0..dim-1.
    CHECK(ce_ranks.size() == dim);
    CHECK(*ce_ranks.rbegin() == dim - 1);
    CHECK(energy_ranks.size() == dim);
}

TEST_CASE("sweep-threshold refits the tree per threshold value") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "sweep_t.csv").string();
    RunResult sw = f.ph2("sweep-threshold --data \"" + f.data + "\" --out \"" + csv + "\" " +
                         f.cfg + " --set val_fraction=0.2 --thresholds 0.05,0.01");
    REQUIRE_MESSAGE(sw.code == 0, sw.err);
    CHECK(printed(sw.out, "rows") == "2");

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "T,train_acc,val_acc");
    CHECK(split_csv(rows[1])[0] == "0.05");
    CHECK(split_csv(rows[2])[0] == "0.01");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::vector<std::string> cells = split_csv(rows[i]);
        REQUIRE(cells.size() == 3);
        for (int c = 1; c <= 2; ++c) {
            const double acc = std::stod(cells[static_cast<std::size_t>(c)]);
            CHECK(acc >= 0.0);
            CHECK(acc <= 1.0);
        }
    }
}

TEST_CASE("sweep-features scores both orderings across feature counts") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "sweep_f.csv").string();
    RunResult sw = f.ph2("sweep-features --data \"" + f.data + "\" --model \"" + f.model +
                         "\" --out \"" + csv + "\" --set val_fraction=0.2 --seed 7 " +
                         "--m-list 8,16");
    REQUIRE_MESSAGE(sw.code == 0, sw.err);
    CHECK(printed(sw.out, "rows") == "4");

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "m,mode,train_acc,val_acc");
    std::map<std::string, int> mode_count;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::vector<std::string> cells = split_csv(rows[i]);
        REQUIRE(cells.size() == 4);
        CHECK((cells[0] == "8" || cells[0] == "16"));
        ++mode_count[cells[1]];
    }
    CHECK(mode_count["cross_entropy"] == 2);
    CHECK(mode_count["energy"] == 2);
}

TEST_CASE("bench-density at the native size reproduces the eval accuracy") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "bench.csv").string();
    RunResult bench = f.ph2("bench-density --data \"" + f.data + "\" --model \"" + f.model +
                            "\" --out \"" + csv + "\" --seed 7 --sizes 192,96");
    REQUIRE_MESSAGE(bench.code == 0, bench.err);
    CHECK(printed(bench.out, "rows") == "2");

    RunResult eval = f.ph2("eval --data \"" + f.data + "\" --model \"" + f.model +
                           "\" --split test");
    REQUIRE(eval.code == 0);

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == "size,overall_acc,class_avg_acc");
    const std::vector<std::string> full_row = split_csv(rows[1]);
    REQUIRE(full_row.size() == 3);
    CHECK(full_row[0] == "192");
    // Resampling all 192 points permutes each cloud, which the features are
    // invariant to, so the full-size row must reproduce eval exactly.
    CHECK(full_row[1] == printed(eval.out, "overall_accuracy"));
    CHECK(full_row[2] == printed(eval.out, "class_avg_accuracy"));
    const std::vector<std::string> half_row = split_csv(rows[2]);
    CHECK(half_row[0] == "96");
    CHECK(std::stod(half_row[1]) >= 0.0);
    CHECK(std::stod(half_row[1]) <= 1.0);
}

TEST_CASE("report-correlation shows decorrelated first-stage outputs") {
    const CliFixture& f = fixture();
    const std::string csv = (f.root / "correlation.csv").string();
    RunResult rep = f.ph2("report-correlation --data \"" + f.data + "\" --model \"" + f.model +
                          "\" --split train --out \"" + csv + "\"");
    REQUIRE_MESSAGE(rep.code == 0, rep.err);
    CHECK(printed(rep.out, "dim") == "24");
    CHECK(std::stod(printed(rep.out, "max_diag")) > 0.0);
    // The train split is what the first-stage filters were fitted on, so the
    // off-diagonal spectral correlations vanish to solver precision.
    CHECK(std::stod(printed(rep.out, "max_ac_ac_ratio")) < 1e-8);
    CHECK(std::stod(printed(rep.out, "max_dc_ac_normalized")) < 1.0);

    const std::vector<std::string> rows = lines_of(slurp(csv));
    REQUIRE(rows.size() == 24);
    std::vector<std::vector<double>> cor(24, std::vector<double>(24));
    for (int i = 0; i < 24; ++i) {
        const std::vector<std::string> cells = split_csv(rows[static_cast<std::size_t>(i)]);
        REQUIRE(cells.size() == 24);
        for (int j = 0; j < 24; ++j)
            cor[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                std::stod(cells[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < 24; ++i) {
        CHECK(cor[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] >= 0.0);
        for (int j = 0; j < 24; ++j)
            CHECK(cor[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ==
                  doctest::Approx(cor[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                      .epsilon(1e-12));
    }
}

TEST_CASE("failures exit nonzero with a typed error prefix") {
    const CliFixture& f = fixture();

    RunResult missing_model = f.ph2("eval --data \"" + f.data + "\" --model \"" +
                                    (f.root / "absent.ph2").string() + "\"");
    CHECK(missing_model.code == 1);
    CHECK(missing_model.err.rfind("ERROR:IOError:", 0) == 0);

    RunResult bad_key = f.ph2("fit --data \"" + f.data + "\" --model \"" +
                              (f.root / "x.ph2").string() + "\" --set bogus=1");
    CHECK(bad_key.code == 1);
    CHECK(bad_key.err.rfind("ERROR:ConfigError:", 0) == 0);

    RunResult no_model_path = f.ph2("fit --data \"" + f.data + "\"");
    CHECK(no_model_path.code == 1);
    CHECK(no_model_path.err.rfind("ERROR:ConfigError:", 0) == 0);

    RunResult no_data = f.ph2("eval --model \"" + f.model + "\"");
    CHECK(no_data.code == 1);
    CHECK(no_data.err.rfind("ERROR:ConfigError:", 0) == 0);

    RunResult missing_flag = f.ph2("sweep-threshold --data \"" + f.data + "\"");
    CHECK(missing_flag.code == 2);
    CHECK(missing_flag.err.rfind("ERROR:Usage:", 0) == 0);

    RunResult unknown = f.ph2("frobnicate");
    CHECK(unknown.code == 2);
    CHECK(unknown.err.rfind("ERROR:Usage:", 0) == 0);
}

TEST_SUITE_END();
