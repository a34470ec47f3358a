#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kScratch = EUCHAR_TEST_TMPDIR;

int run_cli(const std::string& args) {
    std::string cmd = std::string(EUCHAR_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    fs::path p = kScratch / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("generate writes fixtures with a chi record") {
    auto out = scratch("gen_sphere");
    CHECK(run_cli("generate --builtin sphere --radius 1 --resolution 32 --out " + out.string()) ==
          0);
    CHECK(fs::exists(out / "sphere.obj"));
    auto prov = slurp(out / "sphere.json");
    CHECK(prov.find("\"chi\": 2") != std::string::npos);

    auto out2 = scratch("gen_genus2");
    CHECK(run_cli("generate --implicit genus2 --resolution 48 --out " + out2.string()) == 0);
    auto prov2 = slurp(out2 / "genus2.json");
    CHECK(prov2.find("\"chi\": -2") != std::string::npos);
}

TEST_CASE("invalid parameters exit nonzero and name the problem") {
    auto out = scratch("gen_bad");
    CHECK(run_cli("generate --builtin torus --radius 1 2 --out " + out.string()) != 0);
    auto err = slurp(out / "error.json");
    CHECK(err.find("parameter") != std::string::npos);
    CHECK(err.find("R > r") != std::string::npos);
}

TEST_CASE("recover: fourier route on the sphere matches the oracle") {
    auto out = scratch("rec_sphere");
    CHECK(run_cli("recover --builtin sphere --resolution 48 --seed 7 --dlambda 0.4 "
                  "--nsamples 256 --out " +
                  out.string()) == 0);
    auto summary = slurp(out / "summary.json");
    CHECK(summary.find("\"chi_recovered\": 2") != std::string::npos);
    CHECK(summary.find("\"match\": true") != std::string::npos);
    CHECK(fs::exists(out / "spectrum.csv"));
    CHECK(fs::exists(out / "profile.csv"));
    CHECK(fs::exists(out / "decomposition.json"));
    CHECK(fs::exists(out / "genericity.json"));
}

TEST_CASE("recover: torus radon route") {
    auto out = scratch("rec_torus_radon");
    CHECK(run_cli("recover --builtin torus --resolution 48 --route radon --seed 3 "
                  "--dlambda 0.25 --nsamples 256 --radon-bins 900 --out " +
                  out.string()) == 0);
    auto summary = slurp(out / "summary.json");
    CHECK(summary.find("\"chi_recovered\": 0") != std::string::npos);
    CHECK(fs::exists(out / "radon.csv"));
}

TEST_CASE("recover: symmetry axis fails the certificate with a genericity error") {
    auto out = scratch("rec_torus_axis");
    CHECK(run_cli("recover --builtin torus --resolution 48 --direction 0 0 1 --dlambda 0.4 "
                  "--nsamples 256 --out " +
                  out.string()) != 0);
    auto err = slurp(out / "error.json");
    CHECK(err.find("genericity") != std::string::npos);
}

TEST_CASE("reruns are byte identical") {
    auto a = scratch("det_a"), b = scratch("det_b");
    std::string args = "recover --builtin torus --resolution 48 --seed 11 --dlambda 0.4 "
                       "--nsamples 256 --out ";
    CHECK(run_cli(args + a.string()) == 0);
    CHECK(run_cli(args + b.string()) == 0);
    for (const char* f : {"summary.json", "spectrum.csv", "decomposition.json", "profile.csv",
                          "genericity.json"}) {
        CHECK(slurp(a / f) == slurp(b / f));
        CHECK(!slurp(a / f).empty());
    }
}

TEST_CASE("check subcommand certificates") {
    auto out = scratch("chk_dir");
    CHECK(run_cli("check --builtin sphere --resolution 32 --direction 0 0 1 --out " +
                  out.string()) == 0);
    auto j = slurp(out / "check.json");
    CHECK(j.find("\"is_excellent\": true") != std::string::npos);

    auto out2 = scratch("chk_axis");
    CHECK(run_cli("check --builtin torus --resolution 48 --direction 0 0 1 --out " +
                  out2.string()) == 1);

    auto out3 = scratch("chk_focal");
    CHECK(run_cli("check --builtin sphere --resolution 32 --receiver 0 0 0 --out " +
                  out3.string()) == 1);
    CHECK(slurp(out3 / "check.json").find("\"focal\": true") != std::string::npos);
}

TEST_CASE("analyze writes a spectrum and config files override flags") {
    auto out = scratch("analyze");
    // flat key = value config file
    std::ofstream cfg(out / "run.cfg");
    cfg << "# analyze run record\n";
    cfg << "builtin = sphere\n";
    cfg << "resolution = 32\n";
    cfg << "dlambda = 0.4\n";
    cfg << "nsamples = 128\n";
    cfg.close();
    CHECK(run_cli("analyze --config " + (out / "run.cfg").string() + " --direction 0 0 1 --out " +
                  out.string()) == 0);
    CHECK(fs::exists(out / "spectrum.csv"));
    auto meta = slurp(out / "spectrum.json");
    CHECK(meta.find("sphere") != std::string::npos);
}
