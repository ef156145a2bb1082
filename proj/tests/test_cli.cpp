#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>

#include "wiener/bench/dataset.hpp"
#include "wiener/noise_estim.hpp"
#include "wiener/png_io.hpp"
#include "wiener/weight_bundle.hpp"

using namespace wiener;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(WIENERCTL_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("wiener_cli_" + std::to_string(getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
        clean = bench::quantize8(synthetic_scene(11, 64, 64));
        save_png(clean, (dir / "clean.png").string(), 16);
        save_png(clamped(add_noise(clean, NoiseParams{0.0, 20.0 / 255.0, 5})), (dir / "noisy.png").string(), 16);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }

    fs::path dir;
    ImagePlanar clean;
};

} // namespace

TEST_F(Cli, DenoiseWritesOutputAndReportsPsnr) {
    const auto r = run("denoise " + path("noisy.png") + " -o " + path("out.png") + " --clean " + path("clean.png") +
                       " --level W2 --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("level=W2"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("PSNR"), std::string::npos) << r.out;
    const ImagePlanar out = load_png(path("out.png"));
    EXPECT_EQ(out.width, 64);
    EXPECT_GT(psnr(out, clean), psnr(load_png(path("noisy.png")), clean));
}

TEST_F(Cli, SetAndDirectFlagsOverrideLevel) {
    const auto r = run("denoise " + path("noisy.png") + " -o " + path("out.png") +
                       " --level W0 --set stride=3 --dc median --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("stride=3"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("dc=median"), std::string::npos) << r.out;
}

TEST_F(Cli, ConfigFileIsLowestPrecedence) {
    std::ofstream(dir / "run.cfg") << "level = W0\nstride = 5\n";
    const auto r = run("denoise " + path("noisy.png") + " -o " + path("out.png") + " --config " + path("run.cfg") +
                       " --stride 6 --print-config");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("stride=6"), std::string::npos) << r.out;
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("denoise").code, 2);
    EXPECT_EQ(run("denoise " + path("noisy.png") + " -o " + path("o.png") + " --stride 9").code, 2);
    EXPECT_EQ(run("denoise " + path("noisy.png") + " -o " + path("o.png") + " --level W4").code, 2);
    // Oracle settings need the clean reference.
    EXPECT_EQ(run("denoise " + path("noisy.png") + " -o " + path("o.png") + " --level W1").code, 2);
    EXPECT_EQ(run("denoise " + path("missing.png") + " -o " + path("o.png")).code, 3);
    std::ofstream(dir / "junk.wnb") << "not a bundle";
    EXPECT_EQ(run("inspect-weights " + path("junk.wnb")).code, 3);
}

TEST_F(Cli, InspectWeights) {
    write_bundle(make_zero_std_bundle(NetworkDef{}), path("std.wnb"));
    const auto r = run("inspect-weights " + path("std.wnb"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("20451"), std::string::npos) << r.out;
}

TEST_F(Cli, MakeDatasetThenAblate) {
    auto r = run("make-dataset -o " + path("ds") + " --count 2 --patch 48 --seed 3 --realizations 2");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "ds" / "manifest.jsonl"));
    r = run("ablate --dataset " + path("ds") + " --level W0 --grid dc=mean,median -o " + path("abl"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "abl" / "results.csv"));
    EXPECT_TRUE(fs::exists(dir / "abl" / "report.md"));
    r = run("ablate --dataset " + path("ds") + " --level W0 -o " + path("abl2"));
    EXPECT_EQ(r.code, 2) << r.out;
    fs::create_directories(dir / "empty");
    r = run("make-dataset --clean-dir " + path("empty") + " -o " + path("ds2"));
    EXPECT_EQ(r.code, 3) << r.out;
}
