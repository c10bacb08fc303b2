// ph2-synth: write the synthetic four-shape dataset as .xyz directories,
// ready for the ph2 CLI (root/<split>/<class>/<index>.xyz).

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ph2/dataset_io.hpp"
#include "ph2/error.hpp"
#include "ph2/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

void write_split(const std::string& root, const std::string& split, std::size_t per_class,
                 std::size_t points, double noise, std::uint64_t seed) {
    const ph2::Dataset ds = ph2::synthetic_dataset(per_class, points, noise, seed, split);
    std::size_t cloud_idx = 0;
    for (int label = 0; label < ds.num_classes(); ++label) {
        const fs::path dir =
            fs::path(root) / split / ds.class_names[static_cast<std::size_t>(label)];
        fs::create_directories(dir);
        for (std::size_t i = 0; i < per_class; ++i, ++cloud_idx) {
            char name[32];
            std::snprintf(name, sizeof name, "%04zu.xyz", i);
            ph2::save_xyz_file(ds.clouds[cloud_idx], (dir / name).string());
        }
    }
    std::printf("%s: %zu clouds x %zu points, %d classes\n", split.c_str(), ds.size(), points,
                ds.num_classes());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic shape dataset generator"};
    std::string out_root;
    std::size_t train_per_class = 100, test_per_class = 50, points = 1024;
    double noise = 0.01;
    std::uint64_t seed = 1;

    app.add_option("--out", out_root, "output dataset root")->required();
    app.add_option("--train", train_per_class, "training clouds per class (default 100)");
    app.add_option("--test", test_per_class, "test clouds per class (default 50)");
    app.add_option("--points", points, "points per cloud (default 1024)");
    app.add_option("--noise", noise, "coordinate noise sigma (default 0.01)");
    app.add_option("--seed", seed, "generator seed (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "ERROR:Usage:" << e.what() << "\n";
        return 2;
    }

    try {
        write_split(out_root, "train", train_per_class, points, noise, seed);
        write_split(out_root, "test", test_per_class, points, noise, seed);
    } catch (const ph2::Error& e) {
        std::cerr << "ERROR:" << e.kind_name() << ":" << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ERROR:Internal:" << e.what() << "\n";
        return 1;
    }
    return 0;
}
