// opsctl: run scenarios, serve the registry, poke at frames and singulation,
// and administer a running registry.
//
// Exit status: 0 success, 1 domain error, 2 usage error.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ractdas/api_json.hpp"
#include "ractdas/client.hpp"
#include "ractdas/endpoint.hpp"
#include "ractdas/frame_codec.hpp"
#include "ractdas/journal.hpp"
#include "ractdas/service.hpp"
#include "ractdas/simworld.hpp"
#include "ractdas/singulation.hpp"

namespace {

using namespace ractdas;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

struct Verbosity {
    int level = 0;
    void log(int at, const std::string& msg) const {
        if (level >= at) std::cerr << msg << '\n';
    }
};

std::optional<Policy> policy_arg(const std::string& s) {
    if (s.empty()) return std::nullopt;
    auto p = policy_from_name(s);
    if (!p) fail(ErrorCode::MalformedMessage, "policy must be STRICT or LENIENT, got " + s);
    return p;
}

// ---------------------------------------------------------------- frame

struct FrameArgs {
    std::string encode, decode, bits;
};

std::vector<std::uint8_t> parse_hex_bytes(const std::string& text) {
    std::vector<std::uint8_t> out;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        if (tok.size() != 2 || !std::isxdigit(static_cast<unsigned char>(tok[0])) ||
            !std::isxdigit(static_cast<unsigned char>(tok[1]))) {
            fail(ErrorCode::MalformedMessage, "not a hex byte: " + tok);
        }
        out.push_back(static_cast<std::uint8_t>(std::stoul(tok, nullptr, 16)));
    }
    return out;
}

int cmd_frame(const FrameArgs& a) {
    if (!a.encode.empty()) {
        const Frame f = encode_frame(TagId::parse(a.encode));
        std::cout << hex_dump(f) << '\n' << encode_uart(f).str() << '\n';
    } else if (!a.decode.empty()) {
        std::cout << decode_frame(parse_hex_bytes(a.decode)) << '\n';
    } else {
        const auto bytes = decode_uart(BitStream::parse(a.bits));
        std::cout << hex_dump(bytes) << '\n' << decode_frame(bytes) << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- singulate-bench

struct BenchArgs {
    std::string protocol = "aloha";
    int tags = 16;
    int frame_size = 16;
    int max_rounds = 64;
    int trials = 100;
    std::uint64_t seed = 1;
};

std::vector<TagId> random_field(std::mt19937_64& rng, int n) {
    std::set<TagId> tags;
    while (static_cast<int>(tags.size()) < n) tags.insert(TagId::from_value(rng() & TagId::kMaxValue));
    return {tags.begin(), tags.end()};
}

int cmd_bench(const BenchArgs& a) {
    std::mt19937_64 rng(a.seed);
    double first_round = 0, queries = 0;
    for (int trial = 0; trial < a.trials; ++trial) {
        TagField field{random_field(rng, a.tags), rng()};
        if (a.protocol == "aloha") {
            const AlohaResult r = aloha_singulate(field, {a.frame_size, a.max_rounds});
            for (const auto& round : r.rounds) {
                std::cout << json{{"protocol", "aloha"},  {"trial", trial},
                                  {"round", round.round}, {"unread", round.unread_at_start},
                                  {"successes", round.successes()}, {"collisions", round.collisions()},
                                  {"empties", round.empties()}, {"read", round.reads_completed.size()}}
                                 .dump()
                          << '\n';
            }
            if (!r.rounds.empty()) first_round += r.rounds.front().successes();
        } else {
            const TreeResult r = tree_singulate(field);
            std::cout << json{{"protocol", "tree"}, {"trial", trial}, {"tags", a.tags},
                              {"discovered", r.discovered.size()}, {"queries", r.query_count}}
                             .dump()
                      << '\n';
            queries += static_cast<double>(r.query_count);
        }
    }
    json summary{{"summary", true}, {"protocol", a.protocol}, {"trials", a.trials}, {"tags", a.tags}};
    if (a.protocol == "aloha") {
        summary["frame_size"] = a.frame_size;
        summary["mean_first_round_successes"] = a.trials ? first_round / a.trials : 0.0;
    } else {
        summary["mean_queries"] = a.trials ? queries / a.trials : 0.0;
    }
    std::cout << summary.dump() << '\n';
    return kExitOk;
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out = "trace.tsv";
    std::string policy;
    std::string journal;
    bool remote = false;
    std::string wire;
    std::string operator_login = "operator";
};

int cmd_run(const RunArgs& a, const std::string& registry_addr, const Verbosity& v) {
    Scenario s = load_scenario(a.scenario);
    if (a.seed) s.seed = *a.seed;

    std::unique_ptr<RegistryEndpoint> endpoint;
    if (a.remote) {
        RemoteOptions o;
        o.http = parse_address(registry_addr);
        o.wire = parse_address(a.wire);
        o.operator_login = a.operator_login;
        o.operator_password = env_or("RACTDAS_OPERATOR_PASSWORD", "");
        endpoint = std::make_unique<RemoteEndpoint>(o);
        v.log(1, "registry " + registry_addr + ", wire " + a.wire);
    } else {
        RegistryConfig config;
        config.policy = policy_arg(a.policy).value_or(s.policy.value_or(Policy::Strict));
        config.max_retries = s.max_retries;
        RegistryState initial;
        if (!a.journal.empty()) {
            ReplayOutcome replayed = journal_replay(a.journal);
            if (replayed.error) throw *replayed.error;
            initial = std::move(replayed.state);
            v.log(1, "loaded " + std::to_string(replayed.records) + " journal records");
        }
        endpoint = std::make_unique<LocalEndpoint>(config, std::move(initial));
    }

    const EventTrace trace = run_scenario(s, *endpoint);
    if (a.out == "-") {
        std::cout << trace.str();
    } else {
        std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
        if (!f || !(f << trace.str()) || !f.flush()) fail(ErrorCode::JournalIo, "cannot write " + a.out);
        v.log(1, std::to_string(trace.records().size()) + " trace records written to " + a.out);
    }
    return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
    std::string wire = "127.0.0.1:7071";
    std::string journal = "registry.journal";
    std::string policy;
    std::string bootstrap;
};

int cmd_serve(const ServeArgs& a, const std::string& registry_addr, const Verbosity& v) {
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);   // server threads inherit the mask

    RegistryConfig config;
    config.policy = policy_arg(a.policy).value_or(Policy::Strict);
    Registry registry(config, wall_clock_now, std::filesystem::path(a.journal));
    if (!a.bootstrap.empty() && registry.snapshot().users.empty()) {
        registry.bootstrap_operator(a.bootstrap, env_or("RACTDAS_OPERATOR_PASSWORD", ""));
        v.log(0, "bootstrapped operator " + a.bootstrap);
    }

    const Address http_at = parse_address(registry_addr);
    const Address wire_at = parse_address(a.wire);
    HttpApi http(registry);
    WireServer wire(registry);
    const int http_port = http.start(http_at.host, http_at.port);
    const int wire_port = wire.start(wire_at.host, wire_at.port);
    std::cout << json{{"http", to_string({http_at.host, http_port})}, {"wire", to_string({wire_at.host, wire_port})},
                      {"journal", a.journal}}
                     .dump()
              << std::endl;

    int sig = 0;
    sigwait(&stop_signals, &sig);
    v.log(1, "stopping on signal " + std::to_string(sig));
    http.stop();
    wire.stop();
    return kExitOk;
}

// ---------------------------------------------------------------- admin

struct AdminArgs {
    std::string login = env_or("RACTDAS_LOGIN", "");
    std::string token = env_or("RACTDAS_TOKEN", "");
    std::string tag, checkpost, owner, user, user_password, role = "OWNER", new_password;
    std::uint64_t since = 0;
    int wait_ms = 0;
};

void print(const json& j) { std::cout << j.dump() << '\n'; }

int cmd_admin(const std::string& action, const AdminArgs& a, const std::string& registry_addr) {
    HttpClient client(parse_address(registry_addr));
    const std::string password = env_or("RACTDAS_PASSWORD", "");
    if (!a.token.empty()) {
        client.set_token(a.token);
    } else if (!a.login.empty()) {
        const Session s = client.login(a.login, password);
        if (action == "login") {
            print(api::to_json(s));
            return kExitOk;
        }
    } else if (action != "events") {
        fail(ErrorCode::NotAuthorized, "give --login (password in RACTDAS_PASSWORD) or --token");
    }

    if (action == "change-password") {
        client.change_password(password, a.new_password);
        print({{"changed", true}});
    } else if (action == "register-user") {
        print(api::to_json(client.register_user(a.user, a.user_password, api::role_from(a.role))));
    } else if (action == "register-tag") {
        print(api::to_json(client.register_tag(a.owner, TagId::parse(a.tag))));
    } else if (action == "tag") {
        print(api::to_json(client.tag(TagId::parse(a.tag))));
    } else if (action == "report") {
        print(api::to_json(client.report_stolen(TagId::parse(a.tag))));
    } else if (action == "clear") {
        print(api::to_json(client.clear_report(TagId::parse(a.tag))));
    } else if (action == "release") {
        print(api::to_json(a.checkpost, client.release_gate(a.checkpost)));
    } else if (action == "events") {
        const EventPage page = client.events(a.since, std::chrono::milliseconds(a.wait_ms));
        for (const auto& e : page.events) print(api::to_json(e));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ractdas operations tool"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string registry_addr = env_or("RACTDAS_REGISTRY_ADDR", "127.0.0.1:7070");
    Verbosity verbosity;
    app.add_option("--registry", registry_addr, "registry HTTP address host:port (RACTDAS_REGISTRY_ADDR)");
    app.add_flag("-v,--verbose", verbosity.level, "more log output on stderr");

    FrameArgs frame;
    auto* frame_cmd = app.add_subcommand("frame", "encode, decode or bit-expand a reader frame");
    auto* enc = frame_cmd->add_option("--encode", frame.encode, "tag id, ten hex digits");
    auto* dec = frame_cmd->add_option("--decode", frame.decode, "12 frame bytes as space-separated hex");
    auto* bits = frame_cmd->add_option("--bits", frame.bits, "120-bit UART stream of 0/1");
    enc->excludes(dec, bits);
    dec->excludes(bits);
    frame_cmd->require_option(1);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("singulate-bench", "anti-collision experiments, one JSON line per round");
    bench_cmd->add_option("--protocol", bench.protocol)->check(CLI::IsMember({"aloha", "tree"}));
    bench_cmd->add_option("--tags", bench.tags)->check(CLI::Range(0, 4096));
    bench_cmd->add_option("--frame-size", bench.frame_size)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--max-rounds", bench.max_rounds)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--trials", bench.trials)->check(CLI::NonNegativeNumber);
    bench_cmd->add_option("--seed", bench.seed);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "execute a scenario file and write its trace");
    run_cmd->add_option("--scenario", run.scenario)->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--seed", run.seed, "overrides the scenario seed");
    run_cmd->add_option("--out", run.out, "trace path, '-' for stdout")->capture_default_str();
    run_cmd->add_option("--policy", run.policy, "STRICT or LENIENT");
    run_cmd->add_option("--journal", run.journal, "start from a registry journal");
    auto* remote = run_cmd->add_flag("--remote", run.remote, "use a running registry at --registry");
    run_cmd->add_option("--wire", run.wire, "check-post line protocol address")->needs(remote);
    run_cmd->add_option("--operator", run.operator_login, "operator login (password in RACTDAS_OPERATOR_PASSWORD)")
        ->needs(remote);

    ServeArgs serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the registry service on --registry");
    serve_cmd->add_option("--wire", serve.wire, "check-post line protocol address")->capture_default_str();
    serve_cmd->add_option("--journal", serve.journal)->capture_default_str();
    serve_cmd->add_option("--policy", serve.policy, "STRICT or LENIENT");
    serve_cmd->add_option("--bootstrap-operator", serve.bootstrap,
                          "create this operator on an empty registry (password in RACTDAS_OPERATOR_PASSWORD)");

    AdminArgs admin;
    std::string admin_action;
    auto* admin_cmd = app.add_subcommand("admin", "call the registry API");
    admin_cmd->require_subcommand(1);
    admin_cmd->fallthrough();
    admin_cmd->add_option("--login", admin.login, "log in first (password in RACTDAS_PASSWORD)");
    admin_cmd->add_option("--token", admin.token, "existing session token (RACTDAS_TOKEN)");
    auto action = [&](const char* name, const char* help) {
        auto* c = admin_cmd->add_subcommand(name, help);
        c->callback([&admin_action, name] { admin_action = name; });
        return c;
    };
    action("login", "print a new session");
    action("change-password", "change the logged-in account's password")
        ->add_option("--new", admin.new_password)
        ->required();
    auto* ru = action("register-user", "create an account (operator)");
    ru->add_option("--user", admin.user)->required();
    ru->add_option("--password", admin.user_password)->required();
    ru->add_option("--role", admin.role)->check(CLI::IsMember({"OWNER", "OPERATOR"}))->capture_default_str();
    auto* rt = action("register-tag", "bind a tag to an owner");
    rt->add_option("--owner", admin.owner)->required();
    rt->add_option("--tag", admin.tag)->required();
    action("tag", "show a tag record")->add_option("--tag", admin.tag)->required();
    action("report", "report a tag stolen")->add_option("--tag", admin.tag)->required();
    action("clear", "close a theft report")->add_option("--tag", admin.tag)->required();
    action("release", "open an arrested gate (operator)")->add_option("--checkpost", admin.checkpost)->required();
    auto* ev = action("events", "list registry events");
    ev->add_option("--since", admin.since);
    ev->add_option("--wait-ms", admin.wait_ms);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kExitUsage;
    }

    try {
        if (*frame_cmd) return cmd_frame(frame);
        if (*bench_cmd) return cmd_bench(bench);
        if (*run_cmd) return cmd_run(run, registry_addr, verbosity);
        if (*serve_cmd) return cmd_serve(serve, registry_addr, verbosity);
        if (*admin_cmd) return cmd_admin(admin_action, admin, registry_addr);
    } catch (const Error& e) {
        std::cerr << "error: " << error_name(e.code()) << ": " << e.what() << '\n';
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
