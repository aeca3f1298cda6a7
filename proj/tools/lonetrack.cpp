#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "lonetrack/cli.hpp"
#include "lonetrack/io.hpp"

using namespace lonetrack;

namespace {

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::ostringstream s;
        s << std::cin.rdbuf();
        return s.str();
    }
    std::ifstream in(path);
    if (!in) throw InputError("file", "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int fail_input(const InputError& e, const std::string& path, const std::string& sub, bool json) {
    if (json) {
        nlohmann::ordered_json r;
        r["schema_version"] = kReportSchemaVersion;
        r["subcommand"] = sub;
        r["exit_code"] = kExitInputError;
        r["error"] = {{"kind", "input"}, {"check", e.check()}, {"message", e.what()}};
        if (e.line() > 0) r["error"]["line"] = e.line();
        if (e.column() > 0) r["error"]["column"] = e.column();
        std::cout << r.dump(2) << "\n";
    } else {
        std::cerr << path << ": " << e.what() << "\n";
    }
    return kExitInputError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"train track maps, Whitehead graphs and lone axes"};
    app.require_subcommand(1);
    std::string file, second_file;
    bool json = false, dot = false, csv = false;
    CliOptions opt;

    auto add = [&](const std::string& name, const std::string& help) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("file", file, "graph map document ('-' for stdin)")->required();
        sub->add_flag("--json", json, "print the JSON report");
        return sub;
    };
    add("check", "train track test and gate counts");
    add("spectral", "transition matrix, lambda and eigenmetric");
    add("gates", "gates, illegal turns, periodic data and GI");
    auto cells = [&](CLI::App* s) {
        s->add_option("--max-cells", opt.max_cells, "cap on leg dynamics cells")->check(CLI::PositiveNumber);
        return s;
    };
    cells(add("pnp", "periodic Nielsen path search"))->add_option("--bound", opt.bound, "leg length bound")->check(CLI::PositiveNumber);
    {
        auto* s = cells(add("whitehead", "local, stable or ideal Whitehead graphs"));
        s->add_option("--flavor", opt.flavor, "local | stable | ideal")->check(CLI::IsMember({"local", "stable", "ideal"}));
        s->add_option("--bound", opt.bound, "leg length bound for the Nielsen path search")->check(CLI::PositiveNumber);
        s->add_flag("--dot", dot, "print Graphviz DOT");
    }
    cells(add("index", "rotationless index"))->add_option("--bound", opt.bound, "leg length bound")->check(CLI::PositiveNumber);
    {
        auto* s = cells(add("lone-axis", "lone axis decision"));
        s->add_flag("--assert-fully-irreducible", opt.assert_fully_irreducible, "the outer class is known to be fully irreducible");
        s->add_option("--bound", opt.bound, "leg length bound")->check(CLI::PositiveNumber);
    }
    {
        auto* s = add("fold-line", "periodic fold line samples");
        s->add_option("--periods", opt.periods, "number of periods")->check(CLI::PositiveNumber);
        s->add_option("--samples", opt.samples, "samples per period")->check(CLI::NonNegativeNumber);
        s->add_flag("--csv", csv, "print step,edge,length rows");
    }
    add("signature", "axis signature")->add_option("--bound", opt.bound, "leg length bound")->check(CLI::PositiveNumber);
    {
        auto* s = add("conjugate-power", "compare axis signatures of two maps");
        s->add_option("file2", second_file, "second document")->required();
        s->add_option("--max-power", opt.max_power, "largest k and l considered")->check(CLI::PositiveNumber);
        s->add_option("--bound", opt.bound, "leg length bound")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitInputError;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    std::optional<GraphMapDocument> doc;
    std::string current = file;
    try {
        doc = parse_document(read_input(file));
        if (sub == "conjugate-power") {
            current = second_file;
            opt.second = parse_document(read_input(second_file));
        }
    } catch (const InputError& e) {
        return fail_input(e, current, sub, json);
    }

    CliResult res = run_subcommand(sub, opt, *doc);
    if (json) {
        std::cout << res.report.dump(2) << "\n";
    } else if (dot && !res.dot.empty()) {
        std::cout << res.dot;
    } else if (csv && !res.csv.empty()) {
        std::cout << res.csv;
    } else {
        (res.exit_code == kExitInputError ? std::cerr : std::cout) << res.text;
    }
    return res.exit_code;
}
