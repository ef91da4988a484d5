// explorer: batch front end and HTTP service for the fmx engine.

#include <iostream>

#include "CLI11.hpp"

#include "fmx/commands.hpp"
#include "fmx/service.hpp"

namespace {

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-") std::cout << content;
    else fmx::write_file(out, content);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Project, inspect and extract class-labeled tabular data"};
    app.require_subcommand(1);

    std::string data, names, out;
    auto add_io = [&](CLI::App* sub, bool out_required) {
        sub->add_option("--data", data, "delimited rows")->required();
        sub->add_option("--names", names, "XML attribute metadata")->required();
        auto* o = sub->add_option("--out", out, "output path (- for stdout)");
        if (out_required) o->required();
    };

    auto* convert = app.add_subcommand("convert", "re-export a dataset in another format");
    add_io(convert, true);
    std::string out_format = "data_names";
    convert->add_option("--out-format", out_format, "data_names|text|html|delimited")
        ->check(CLI::IsMember({"data_names", "text", "html", "delimited"}));

    auto* project = app.add_subcommand("project", "FastMap projection to coords.tsv");
    add_io(project, true);
    std::size_t k = 2, pivot_iters = 5;
    std::uint64_t seed = 0;
    std::string znorm = "none", impute = "drop";
    project->add_option("--k", k, "target dimensions")->check(CLI::PositiveNumber);
    project->add_option("--pivot-iters", pivot_iters, "pivot search iterations")->check(CLI::PositiveNumber);
    project->add_option("--znorm", znorm, "none|sigma|mad")->check(CLI::IsMember({"none", "sigma", "mad"}));
    project->add_option("--impute", impute, "drop|mean|class-mean|const:V");
    project->add_option("--seed", seed, "pivot start seed");

    auto* stats = app.add_subcommand("stats", "attribute summaries and per-class diameters as JSON");
    add_io(stats, true);
    std::string coords, stats_znorm = "none", stats_impute = "drop";
    stats->add_option("--coords", coords, "coords.tsv from `project`");
    stats->add_option("--znorm", stats_znorm, "encoding of the base metric")->check(CLI::IsMember({"none", "sigma", "mad"}));
    stats->add_option("--impute", stats_impute, "drop|mean|class-mean|const:V");

    auto* extract = app.add_subcommand("extract", "filter, project and sort rows, or emit the SQL");
    add_io(extract, false);
    std::vector<std::string> where, sort;
    std::string columns, schema, link = "smart", group, extract_format = "delimited";
    bool distinct = false, emit_sql = false;
    extract->add_option("--where", where, "attr:op:operand (repeatable)");
    extract->add_option("--columns", columns, "comma-separated attribute list");
    extract->add_option("--sort", sort, "attr:asc|attr:desc (repeatable)");
    extract->add_flag("--distinct", distinct, "drop duplicate rows");
    extract->add_flag("--emit-sql", emit_sql, "write the SQL text instead of the rows");
    extract->add_option("--schema", schema, "JSON sidecar with source name and value types");
    extract->add_option("--link", link, "smart|and|or")->check(CLI::IsMember({"smart", "and", "or"}));
    extract->add_option("--group", group, "comma-separated keys; writes nested counts as JSON");
    extract->add_option("--out-format", extract_format, "data_names|text|html|delimited")
        ->check(CLI::IsMember({"data_names", "text", "html", "delimited"}));

    auto* serve = app.add_subcommand("serve", "HTTP/JSON session service");
    int port = 8080;
    std::string data_dir = ".", host = "127.0.0.1";
    std::size_t max_rows = 20000;
    serve->add_option("--port", port, "listen port")->required();
    serve->add_option("--data-dir", data_dir, "root for path references")->check(CLI::ExistingDirectory);
    serve->add_option("--host", host, "bind address");
    serve->add_option("--max-project-rows", max_rows, "refuse projections over this many rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*convert) {
            auto d = fmx::load_dataset_files(data, names);
            auto files = fmx::export_dataset(d, fmx::parse_export_format(out_format));
            if (files.size() == 1) emit(out, files.begin()->second);
            else fmx::write_export(files, out);
        } else if (*project) {
            auto d = fmx::load_dataset_files(data, names);
            fmx::ProjectCommand cmd;
            cmd.projection.k = k;
            cmd.projection.pivot_iterations = pivot_iters;
            cmd.projection.seed = seed;
            cmd.znorm = fmx::parse_znorm(znorm);
            cmd.impute = fmx::parse_impute(impute);
            auto r = fmx::run_project(d, cmd);
            for (const auto& w : r.indexed.warnings) std::cerr << "warning: " << w << "\n";
            emit(out, fmx::coords_tsv(r.dataset, r.projection));
        } else if (*stats) {
            auto d = fmx::load_dataset_files(data, names);
            std::optional<fmx::Projection> p;
            if (!coords.empty()) p = fmx::parse_coords_tsv(fmx::read_file(coords));
            fmx::StatsCommand cmd{fmx::parse_znorm(stats_znorm), fmx::parse_impute(stats_impute)};
            emit(out, fmx::run_stats(d, p, cmd).dump(2) + "\n");
        } else if (*extract) {
            auto d = fmx::load_dataset_files(data, names);
            fmx::ExtractCommand cmd;
            cmd.where = where;
            cmd.columns = fmx::split_list(columns);
            cmd.sort = sort;
            cmd.distinct = distinct;
            cmd.link = fmx::parse_link_mode(link);
            if (!schema.empty()) cmd.schema = fmx::schema_from_json(fmx::json::parse(fmx::read_file(schema)));
            auto plan = fmx::build_query(d.metadata, cmd);
            for (const auto& w : plan.warnings) std::cerr << "warning: " << w << "\n";
            if (emit_sql) {
                emit(out, fmx::emit_sql(plan.query));
            } else {
                auto result = fmx::evaluate(plan.query, d, cmd.schema);
                if (!group.empty()) {
                    fmx::json g = fmx::json::array();
                    for (const auto& node : fmx::group_counts(result, fmx::split_list(group))) g.push_back(fmx::to_json(node));
                    emit(out, g.dump(2) + "\n");
                } else if (extract_format == "data_names") {
                    if (out.empty() || out == "-") throw fmx::Error("data_names output needs --out");
                    fmx::write_export(fmx::export_dataset(result, fmx::ExportFormat::data_names), out);
                } else {
                    auto files = fmx::export_dataset(result, fmx::parse_export_format(extract_format));
                    emit(out, files.begin()->second);
                }
            }
        } else if (*serve) {
            fmx::ServiceConfig config{data_dir, max_rows};
            std::cerr << "listening on " << host << ":" << port << "\n";
            if (!fmx::serve(config, host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return 1;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
