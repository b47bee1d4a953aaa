#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct outcome {
    int code;
    std::string out;
};

outcome run(const std::string& args) {
    const std::string cmd = std::string(ISTL_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    if (p == nullptr) return {-1, ""};
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("istl_cli_" + std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write(const std::string& name, const std::string& text) {
        const auto path = dir_ / name;
        std::ofstream(path) << text;
        return path.string();
    }

    static std::string data(const std::string& name) { return std::string(ISTL_DATA_DIR) + "/" + name; }

    fs::path dir_;
};

} // namespace

TEST_F(Cli, MonitorVerdictsAreExitCodes) {
    const auto spec = write("p.stl", "vars y;\ny - 0.7 >= 0\n");
    const auto yes = run("monitor " + spec + " " + write("a.csv", "t,y\n0,1\n"));
    EXPECT_EQ(yes.code, 0);
    EXPECT_NE(yes.out.find("\n0,0.30000000000000004,0.30000000000000004,True\n"), std::string::npos) << yes.out;

    EXPECT_EQ(run("monitor " + spec + " " + write("b.csv", "t,y\n0,0.5\n")).code, 1);
    EXPECT_EQ(run("monitor " + spec + " " + write("c.csv", "t,y:lo,y:hi\n0,0.5,1\n")).code, 2);
    EXPECT_EQ(run("monitor " + spec + " " + write("d.csv", "t,y\n0,0.69\n") + " --radii y=0.02").code, 2);
}

TEST_F(Cli, Errors) {
    const auto trace = write("a.csv", "t,y\n0,1\n");
    EXPECT_EQ(run("monitor " + write("bad.stl", "vars y;\ny >= \n") + " " + trace).code, 4);
    EXPECT_EQ(run("monitor " + write("p.stl", "vars y;\ny >= 0\n") + " /nonexistent.csv").code, 5);
    EXPECT_EQ(run("monitor " + write("q.stl", "vars y;\nF[0,3] y >= 0\n") + " " + trace).code, 3);
    EXPECT_GE(run("monitor").code, 3);
    EXPECT_GE(run("nonsense").code, 3);
}

TEST_F(Cli, MonitorShippedBlimpTrace) {
    const auto r = run("monitor " + data("blimp.stl") + " " + data("blimp_trace.csv") +
                       " --radii x=0.02,y=0.02,z=0.02,vx=0.075,vy=0.075,vz=0.075");
    EXPECT_LE(r.code, 2);
    EXPECT_NE(r.out.find("t,rho_lo,rho_hi,verdict"), std::string::npos);
}

TEST_F(Cli, CheckSoundness) {
    const auto out = (dir_ / "report.csv").string();
    const auto r = run("check-soundness " + data("oscillate.stl") + " " +
                       write("y.csv", "t,y:lo,y:hi\n" + [] {
                           std::string rows;
                           for (int t = 0; t < 20; ++t) {
                               rows += std::to_string(t) + "," + std::to_string(0.6 + 0.04 * t) + "," +
                                       std::to_string(0.65 + 0.04 * t) + "\n";
                           }
                           return rows;
                       }()) + " --samples 200 --seed 5 --out " + out);
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("violations 0"), std::string::npos) << r.out;
}

TEST_F(Cli, SynthIsDeterministicWithoutTiming) {
    const std::string args = "synth " + data("double_integrator.json") + " " + data("oscillate.stl") +
                             " --steps 2 --seed 4 --no-timing --monte-carlo 3";
    const auto a = run(args);
    const auto b = run(args);
    EXPECT_EQ(a.code, 0) << a.out;
    EXPECT_EQ(a.out, b.out);
    EXPECT_NE(a.out.find("violations=0"), std::string::npos) << a.out;
}

TEST_F(Cli, EncodeWritesLp) {
    const auto r = run("encode " + data("double_integrator.json") + " " + data("oscillate.stl"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.rfind("\\ istl model", 0), 0u);
    EXPECT_NE(r.out.find("Binaries"), std::string::npos);
    EXPECT_EQ(r.out.substr(r.out.size() - 4), "End\n");
}
