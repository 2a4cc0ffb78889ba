#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "support/registry_fixture.hpp"

extern char** environ;

namespace {

using ractdas::testing::TempDir;

struct Child {
    pid_t pid = -1;
    int out = -1;
    int err = -1;
};

Child spawn(const std::vector<std::string>& args, const std::map<std::string, std::string>& env) {
    int out[2], err[2];
    REQUIRE(pipe(out) == 0);
    REQUIRE(pipe(err) == 0);
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, out[1], 1);
    posix_spawn_file_actions_adddup2(&fa, err[1], 2);
    posix_spawn_file_actions_addclose(&fa, out[0]);
    posix_spawn_file_actions_addclose(&fa, err[0]);

    std::vector<std::string> env_text;
    for (char** e = environ; *e; ++e) {
        const std::string kv = *e;
        if (kv.rfind("RACTDAS_", 0) != 0) env_text.push_back(kv);
    }
    for (const auto& [k, v] : env) env_text.push_back(k + "=" + v);
    std::vector<char*> envp, argv;
    for (auto& s : env_text) envp.push_back(s.data());
    envp.push_back(nullptr);
    std::vector<std::string> full = {OPSCTL_PATH};
    full.insert(full.end(), args.begin(), args.end());
    for (auto& s : full) argv.push_back(s.data());
    argv.push_back(nullptr);

    Child c;
    REQUIRE(posix_spawn(&c.pid, OPSCTL_PATH, &fa, nullptr, argv.data(), envp.data()) == 0);
    posix_spawn_file_actions_destroy(&fa);
    close(out[1]);
    close(err[1]);
    c.out = out[0];
    c.err = err[0];
    return c;
}

std::string drain(int fd) {
    std::string s;
    char buf[4096];
    ssize_t n;
    while ((n = read(fd, buf, sizeof buf)) > 0) s.append(buf, static_cast<std::size_t>(n));
    close(fd);
    return s;
}

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result wait_for(Child c) {
    // Drain stderr on the side so neither pipe can fill up.
    std::string err;
    std::thread t([&] { err = drain(c.err); });
    std::string out = drain(c.out);
    t.join();
    int st = 0;
    waitpid(c.pid, &st, 0);
    return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, out, err};
}

Result opsctl(const std::vector<std::string>& args, const std::map<std::string, std::string>& env = {}) {
    return wait_for(spawn(args, env));
}

std::string read_line(int fd) {
    std::string line;
    char ch;
    pollfd p{fd, POLLIN, 0};
    while (poll(&p, 1, 10000) > 0 && read(fd, &ch, 1) == 1) {
        if (ch == '\n') return line;
        line += ch;
    }
    FAIL("server did not report its addresses");
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_CASE("frame subcommand") {
    const Result r = opsctl({"frame", "--encode", "0F0184F07A"});
    CHECK(r.status == 0);
    std::istringstream lines(r.out);
    std::string dump, bits;
    std::getline(lines, dump);
    std::getline(lines, bits);
    CHECK(dump == "0A 30 46 30 31 38 34 46 30 37 41 0D");
    bits.erase(std::remove(bits.begin(), bits.end(), ' '), bits.end());
    CHECK(bits.size() == 120);
    CHECK(bits.substr(0, 10) == "0010100001");   // 0x0A: start, 01010000, stop

    CHECK(opsctl({"frame", "--decode", dump}).out == "0F0184F07A\n");
    const Result back = opsctl({"frame", "--bits", bits});
    CHECK(back.status == 0);
    CHECK(back.out == dump + "\n0F0184F07A\n");

    const Result bad = opsctl({"frame", "--decode", "0B 30 46 30 31 38 34 46 30 37 41 0D"});
    CHECK(bad.status == 1);
    CHECK(bad.err.find("BadStartByte") != std::string::npos);
    CHECK(opsctl({"frame", "--encode", "XYZ"}).status == 1);
}

TEST_CASE("usage errors exit 2 with a synopsis") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {}, {"bogus"}, {"frame"}, {"frame", "--encode", "0F0184F07A", "--decode", "x"},
             {"run"}, {"singulate-bench", "--protocol", "csma"}, {"admin"}}) {
        const Result r = opsctl(args);
        CAPTURE(args.size());
        CHECK(r.status == 2);
        CHECK(r.err.find("Usage") != std::string::npos);
    }
}

TEST_CASE("singulate-bench emits JSON lines") {
    const Result r = opsctl({"singulate-bench", "--tags", "16", "--trials", "20", "--seed", "5"});
    REQUIRE(r.status == 0);
    std::istringstream in(r.out);
    std::string line;
    int rounds = 0;
    nlohmann::json last;
    while (std::getline(in, line)) {
        last = nlohmann::json::parse(line);
        if (!last.contains("summary")) {
            ++rounds;
            CHECK(last["successes"].get<int>() + last["collisions"].get<int>() + last["empties"].get<int>() == 16);
        }
    }
    CHECK(rounds >= 20);
    CHECK(last["summary"] == true);
    CHECK(last["mean_first_round_successes"].get<double>() > 3.0);
    CHECK(opsctl({"singulate-bench", "--tags", "16", "--trials", "20", "--seed", "5"}).out == r.out);

    const Result tree = opsctl({"singulate-bench", "--protocol", "tree", "--tags", "32", "--trials", "3"});
    CHECK(tree.status == 0);
    CHECK(tree.out.find("\"discovered\":32") != std::string::npos);
}

TEST_CASE("run is deterministic per seed") {
    TempDir dir;
    const auto a = dir.path() / "a.tsv", b = dir.path() / "b.tsv", c = dir.path() / "c.tsv";
    const std::string scenario = std::string(SOURCE_DIR) + "/scenarios/demo.json";
    REQUIRE(opsctl({"run", "--scenario", scenario, "--seed", "42", "--out", a.string()}).status == 0);
    REQUIRE(opsctl({"run", "--scenario", scenario, "--seed", "42", "--out", b.string()}).status == 0);
    REQUIRE(opsctl({"run", "--scenario", scenario, "--seed", "9", "--out", c.string()}).status == 0);
    CHECK(!slurp(a).empty());
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));   // the link corrupts bytes, so the seed matters
    CHECK(opsctl({"run", "--scenario", scenario, "--out", "-"}).out == slurp(a));

    const auto bad = dir.path() / "bad.json";
    std::ofstream(bad) << R"({"version":1,"duration":1,"vehicles":[],"checkposts":[],"extra":0})";
    const Result r = opsctl({"run", "--scenario", bad.string(), "--out", "-"});
    CHECK(r.status == 1);
    CHECK(r.err.find("ScenarioInvalid") != std::string::npos);
}

TEST_CASE("serve and administer") {
    TempDir dir;
    const std::string journal = (dir.path() / "registry.journal").string();
    const std::map<std::string, std::string> op_env{{"RACTDAS_OPERATOR_PASSWORD", "operator-pw"}};
    Child server = spawn({"serve", "--registry", "127.0.0.1:0", "--wire", "127.0.0.1:0", "--journal", journal,
                          "--bootstrap-operator", "op"},
                         op_env);
    const auto ready = nlohmann::json::parse(read_line(server.out));
    const std::string http = ready["http"], wire = ready["wire"];

    auto as = [&](const std::string& login, const std::string& password) {
        return std::map<std::string, std::string>{
            {"RACTDAS_REGISTRY_ADDR", http}, {"RACTDAS_LOGIN", login}, {"RACTDAS_PASSWORD", password}};
    };
    const auto op = as("op", "operator-pw");

    Result r = opsctl({"admin", "register-user", "--user", "alice", "--password", "s3cretpw!"}, op);
    CHECK(r.status == 0);
    CHECK(nlohmann::json::parse(r.out)["role"] == "OWNER");
    CHECK(opsctl({"admin", "register-tag", "--owner", "alice", "--tag", "0F0184F07A"}, op).status == 0);

    r = opsctl({"admin", "report", "--tag", "DEADBEEF00"}, op);
    CHECK(r.status == 1);
    CHECK(r.err.find("UnknownTag") != std::string::npos);

    const auto alice = as("alice", "s3cretpw!");
    r = opsctl({"admin", "register-user", "--user", "mallory", "--password", "whatever1"}, alice);
    CHECK(r.status == 1);
    CHECK(r.err.find("NotAuthorized") != std::string::npos);
    CHECK(opsctl({"admin", "report", "--tag", "0F0184F07A"}, alice).status == 0);
    r = opsctl({"admin", "report", "--tag", "0F0184F07A"}, alice);
    CHECK(r.err.find("AlreadyReported") != std::string::npos);
    r = opsctl({"admin", "tag", "--tag", "0F0184F07A"}, alice);
    CHECK(nlohmann::json::parse(r.out)["status"] == "REPORTED_STOLEN");
    CHECK(opsctl({"admin", "login"}, as("alice", "wrong")).err.find("BadCredentials") != std::string::npos);

    r = opsctl({"admin", "login"}, alice);
    REQUIRE(r.status == 0);
    const std::string token = nlohmann::json::parse(r.out)["token"];
    CHECK(opsctl({"admin", "--token", token, "clear", "--tag", "0F0184F07A"}, {{"RACTDAS_REGISTRY_ADDR", http}})
              .status == 0);
    CHECK(opsctl({"admin", "change-password", "--new", "n3w-passw0rd"}, alice).status == 0);
    CHECK(opsctl({"admin", "login"}, as("alice", "n3w-passw0rd")).status == 0);

    r = opsctl({"admin", "release", "--checkpost", "CP1"}, op);
    CHECK(r.status == 0);
    CHECK(nlohmann::json::parse(r.out)["gate"] == "OPEN");

    r = opsctl({"admin", "events", "--since", "0"}, op);
    CHECK(r.status == 0);
    std::vector<std::string> kinds;
    std::istringstream in(r.out);
    for (std::string line; std::getline(in, line);) kinds.push_back(nlohmann::json::parse(line)["kind"]);
    CHECK(kinds == std::vector<std::string>{"report_opened", "report_cleared", "gate_released"});

    CHECK(opsctl({"admin", "events"}, {{"RACTDAS_REGISTRY_ADDR", "127.0.0.1:1"}}).err.find("RegistryUnreachable") !=
          std::string::npos);

    // Drive the demo scenario against the running service.
    r = opsctl({"run", "--scenario", std::string(SOURCE_DIR) + "/scenarios/demo.json", "--out", "-", "--remote",
                "--wire", wire, "--operator", "op"},
               {{"RACTDAS_REGISTRY_ADDR", http}, {"RACTDAS_OPERATOR_PASSWORD", "operator-pw"}});
    CHECK(r.status == 0);
    CHECK(r.out.find("gate_close\tcheckpost=CP2 tag=0F0184F075") != std::string::npos);

    kill(server.pid, SIGTERM);
    CHECK(wait_for(server).status == 0);

    // The journal survives a restart.
    Child again = spawn({"serve", "--registry", "127.0.0.1:0", "--wire", "127.0.0.1:0", "--journal", journal}, {});
    const std::string http2 = nlohmann::json::parse(read_line(again.out))["http"];
    r = opsctl({"admin", "tag", "--tag", "0F0184F07A"},
               {{"RACTDAS_REGISTRY_ADDR", http2}, {"RACTDAS_LOGIN", "op"}, {"RACTDAS_PASSWORD", "operator-pw"}});
    CHECK(r.status == 0);
    CHECK(nlohmann::json::parse(r.out)["owner"] == "alice");
    kill(again.pid, SIGTERM);
    CHECK(wait_for(again).status == 0);
}
