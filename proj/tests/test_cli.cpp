#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

// MASKMIX_CLI_PATH is injected by the build; these tests drive the installed
// command line surface end to end through a shell.

namespace {

namespace fs = std::filesystem;

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + MASKMIX_CLI_PATH + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) result.output.append(buf.data(), n);
    const int status = pclose(pipe);
    REQUIRE(status != -1);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("maskmix-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

// One toy world and a short training config shared by the slower cases.
struct Workspace {
    TempDir dir;
    std::string world_path;
    Workspace() {
        world_path = dir.file("world.json");
        CliResult r = run_cli("world create --layout toy --seed 7 --out " + world_path);
        REQUIRE(r.exit_code == 0);
    }
    std::string config(int iterations, const std::string& extra = "") const {
        std::ostringstream ss;
        ss << "{\n  \"desk_preset\": true,\n  \"iterations\": " << iterations
           << ",\n  \"seed\": 3,\n  \"log_every\": 5,\n  \"checkpoint_every\": 0,\n"
           << "  \"world_path\": \"" << world_path << "\"" << (extra.empty() ? "" : ",\n")
           << extra << "\n}\n";
        return ss.str();
    }
};

}  // namespace

TEST_CASE("help and argument errors use the documented exit codes") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("train --help").exit_code == 0);
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("--bogus-flag").exit_code == 2);
    CHECK(run_cli("world create --layout toy").exit_code == 2);  // missing --out
    CliResult help = run_cli("--help");
    CHECK(help.output.find("train") != std::string::npos);
    CHECK(help.output.find("eval") != std::string::npos);
}

TEST_CASE("world creation is reproducible and reports its geometry") {
    TempDir dir;
    CliResult a = run_cli("world create --layout toy --seed 7 --out " + dir.file("a.json"));
    CliResult b = run_cli("world create --layout toy --seed 7 --out " + dir.file("b.json"));
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.output.find("digest") != std::string::npos);
    CHECK(read_file(dir.file("a.json")) == read_file(dir.file("b.json")));

    CliResult c = run_cli("world create --layout toy --seed 8 --out " + dir.file("c.json"));
    REQUIRE(c.exit_code == 0);
    CHECK(read_file(dir.file("a.json")) != read_file(dir.file("c.json")));

    CHECK(run_cli("world create --layout nope --out " + dir.file("d.json")).exit_code == 2);
}

TEST_CASE("the full-scale layout reports its published width") {
    TempDir dir;
    CliResult r =
        run_cli("world create --layout stylegan2-ffhq --seed 3 --out " + dir.file("big.json"));
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("5632") != std::string::npos);
    CHECK(r.output.find("9088") != std::string::npos);
}

TEST_CASE("sampled codes load back against their world") {
    Workspace ws;
    std::string code = ws.dir.file("code.json");
    CliResult r = run_cli("code sample --world " + ws.world_path + " --seed 5 --out " + code);
    REQUIRE(r.exit_code == 0);
    CHECK(fs::exists(code));
    CliResult again =
        run_cli("code sample --world " + ws.world_path + " --seed 5 --out " + ws.dir.file("code2.json"));
    REQUIRE(again.exit_code == 0);
    CHECK(read_file(code) == read_file(ws.dir.file("code2.json")));
}

TEST_CASE("training writes checkpoint, log, and manifest deterministically") {
    Workspace ws;
    write_file(ws.dir.file("cfg.json"), ws.config(40));
    std::string run1 = ws.dir.file("run1");
    std::string run2 = ws.dir.file("run2");
    CliResult a = run_cli("train --config " + ws.dir.file("cfg.json") + " --out-dir " + run1);
    REQUIRE(a.exit_code == 0);
    CHECK(a.output.find("40") != std::string::npos);
    CHECK(fs::exists(run1 + "/checkpoint.json"));
    CHECK(fs::exists(run1 + "/train_log.csv"));
    CHECK(fs::exists(run1 + "/manifest.json"));

    // Cadence 5 over 40 iterations: 8 data rows plus the header.
    std::istringstream log(read_file(run1 + "/train_log.csv"));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(log, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 9);

    CliResult b = run_cli("train --config " + ws.dir.file("cfg.json") + " --out-dir " + run2);
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(run1 + "/checkpoint.json") == read_file(run2 + "/checkpoint.json"));
    CHECK(read_file(run1 + "/train_log.csv") == read_file(run2 + "/train_log.csv"));
}

TEST_CASE("a resumed run matches an uninterrupted one byte for byte") {
    Workspace ws;
    write_file(ws.dir.file("cfg20.json"), ws.config(20));
    write_file(ws.dir.file("cfg40.json"), ws.config(40));
    std::string straight = ws.dir.file("straight");
    std::string first = ws.dir.file("first");
    std::string second = ws.dir.file("second");

    REQUIRE(run_cli("train --config " + ws.dir.file("cfg40.json") + " --out-dir " + straight)
                .exit_code == 0);
    REQUIRE(run_cli("train --config " + ws.dir.file("cfg20.json") + " --out-dir " + first)
                .exit_code == 0);
    CliResult resumed = run_cli("train --config " + ws.dir.file("cfg40.json") + " --resume " +
                                first + "/checkpoint.json --out-dir " + second);
    REQUIRE(resumed.exit_code == 0);
    CHECK(read_file(straight + "/checkpoint.json") == read_file(second + "/checkpoint.json"));

    // Resuming a completed run performs no iterations and succeeds.
    CliResult done = run_cli("train --config " + ws.dir.file("cfg40.json") + " --resume " +
                             straight + "/checkpoint.json --out-dir " + ws.dir.file("noop"));
    CHECK(done.exit_code == 0);
    CHECK(done.output.find("0 iterations") != std::string::npos);
}

TEST_CASE("evaluation reports are stable and validate their inputs") {
    Workspace ws;
    write_file(ws.dir.file("cfg.json"), ws.config(30));
    std::string run = ws.dir.file("run");
    REQUIRE(run_cli("train --config " + ws.dir.file("cfg.json") + " --out-dir " + run)
                .exit_code == 0);
    const std::string ckpt = run + "/checkpoint.json";

    CliResult a = run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path +
                          " --pairs 12 --seed 11 --out " + ws.dir.file("r1.json"));
    REQUIRE(a.exit_code == 0);
    CliResult b = run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path +
                          " --pairs 12 --seed 11 --out " + ws.dir.file("r2.json"));
    REQUIRE(b.exit_code == 0);
    CHECK(read_file(ws.dir.file("r1.json")) == read_file(ws.dir.file("r2.json")));

    CliResult table = run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path +
                              " --pairs 6 --seed 11 --format table");
    REQUIRE(table.exit_code == 0);
    CHECK(table.output.find("csim") != std::string::npos);
    CliResult csv = run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path +
                            " --pairs 6 --seed 11 --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.output.find("csim,") != std::string::npos);

    CHECK(run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path + " --pairs 1")
              .exit_code == 2);
    CHECK(run_cli("eval --checkpoint " + ckpt + " --world " + ws.world_path +
                  " --probe sometimes")
              .exit_code == 2);

    // A world from a different seed is a cross-artifact mismatch.
    REQUIRE(run_cli("world create --layout toy --seed 8 --out " + ws.dir.file("other.json"))
                .exit_code == 0);
    CHECK(run_cli("eval --checkpoint " + ckpt + " --world " + ws.dir.file("other.json") +
                  " --pairs 6")
              .exit_code == 4);
}

TEST_CASE("mask inspection emits one row per active channel") {
    Workspace ws;
    write_file(ws.dir.file("cfg.json"), ws.config(10));
    std::string run = ws.dir.file("run");
    REQUIRE(run_cli("train --config " + ws.dir.file("cfg.json") + " --out-dir " + run)
                .exit_code == 0);
    CliResult r = run_cli("inspect-mask --checkpoint " + run + "/checkpoint.json --world " +
                          ws.world_path + " --pairs 10 --seed 11 --out " + ws.dir.file("mask.csv"));
    REQUIRE(r.exit_code == 0);
    std::istringstream csv(read_file(ws.dir.file("mask.csv")));
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++lines;
    CHECK(lines == 65);  // header plus 64 active channels
}

TEST_CASE("reenactment writes a code with its semantics attached") {
    Workspace ws;
    write_file(ws.dir.file("cfg.json"), ws.config(10));
    std::string run = ws.dir.file("run");
    REQUIRE(run_cli("train --config " + ws.dir.file("cfg.json") + " --out-dir " + run)
                .exit_code == 0);
    REQUIRE(run_cli("code sample --world " + ws.world_path + " --seed 21 --out " +
                    ws.dir.file("src.json"))
                .exit_code == 0);
    REQUIRE(run_cli("code sample --world " + ws.world_path + " --seed 22 --out " +
                    ws.dir.file("tgt.json"))
                .exit_code == 0);

    CliResult r = run_cli("reenact --checkpoint " + run + "/checkpoint.json --world " +
                          ws.world_path + " --source " + ws.dir.file("src.json") + " --target " +
                          ws.dir.file("tgt.json") + " --out " + ws.dir.file("out.json"));
    REQUIRE(r.exit_code == 0);
    std::string out = read_file(ws.dir.file("out.json"));
    CHECK(out.find("\"semantics\"") != std::string::npos);
    CHECK(out.find("\"values\"") != std::string::npos);

    // A code whose layout hash was edited no longer belongs to this world.
    std::string tampered = read_file(ws.dir.file("src.json"));
    const std::string key = "\"layout_hash\": \"";
    std::size_t pos = tampered.find(key);
    REQUIRE(pos != std::string::npos);
    pos += key.size();
    tampered[pos] = tampered[pos] == 'a' ? 'b' : 'a';
    write_file(ws.dir.file("bad.json"), tampered);
    CHECK(run_cli("reenact --checkpoint " + run + "/checkpoint.json --world " + ws.world_path +
                  " --source " + ws.dir.file("bad.json") + " --target " + ws.dir.file("tgt.json") +
                  " --out " + ws.dir.file("out2.json"))
              .exit_code == 4);
}

TEST_CASE("malformed inputs exit with the argument error code") {
    Workspace ws;
    write_file(ws.dir.file("broken.json"), "{ not json at all");
    CHECK(run_cli("train --config " + ws.dir.file("broken.json")).exit_code == 2);

    write_file(ws.dir.file("unknown.json"),
               "{\"desk_preset\": true, \"iterations\": 5, \"world_path\": \"" + ws.world_path +
                   "\", \"mystery\": 1}");
    CHECK(run_cli("train --config " + ws.dir.file("unknown.json")).exit_code == 2);

    CHECK(run_cli("train --config " + ws.dir.file("missing.json")).exit_code == 2);

    // A config without a world path cannot train.
    write_file(ws.dir.file("noworld.json"), "{\"desk_preset\": true, \"iterations\": 5}");
    CHECK(run_cli("train --config " + ws.dir.file("noworld.json")).exit_code == 2);
}
