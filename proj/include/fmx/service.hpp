#pragma once

#include <charconv>
#include <filesystem>
#include <functional>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "fmx/commands.hpp"
#include "fmx/json_io.hpp"
#include "fmx/session.hpp"

/**
 * @file service.hpp
 *
 * @brief HTTP/JSON front end over SessionStore. Routes and payloads are
 * listed in docs/api.md.
 */

namespace fmx {

struct ServiceConfig {
    /// Root for `data_path`/`names_path` references in POST /sessions.
    std::filesystem::path data_dir = ".";
    std::size_t max_project_rows = 20000;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class BadRequest : public Error {
public:
    using Error::Error;
};

namespace service_detail {

inline json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw BadRequest(std::string("malformed JSON body: ") + e.what());
    }
}

inline RowId parse_row_id(const std::string& s) {
    RowId id = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw BadRequest("row id '" + s + "' is not an integer");
    return id;
}

inline double query_double(const httplib::Request& req, const std::string& key, std::optional<double> fallback = {}) {
    if (!req.has_param(key)) {
        if (fallback) return *fallback;
        throw BadRequest("query parameter '" + key + "' is required");
    }
    auto v = parse_number(req.get_param_value(key));
    if (!v) throw BadRequest("query parameter '" + key + "' is not a number");
    return *v;
}

inline std::size_t query_size(const httplib::Request& req, const std::string& key, std::size_t fallback) {
    if (!req.has_param(key)) return fallback;
    const auto s = req.get_param_value(key);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw BadRequest("query parameter '" + key + "' is not a count");
    return v;
}

inline void send(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
    send(res, {{"error", message}, {"status", status}}, status);
}

/// Runs `fn`, mapping the error hierarchy onto status codes.
inline void guarded(httplib::Response& res, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const NotFound& e) {
        send_error(res, 404, e.what());
    } catch (const BadRequest& e) {
        send_error(res, 400, e.what());
    } catch (const StateError& e) {
        send_error(res, 409, e.what());
    } catch (const ParseError& e) {
        send_error(res, 422, e.what());
    } catch (const DomainError& e) {
        send_error(res, 422, e.what());
    } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad payload: ") + e.what());
    } catch (const Error& e) {
        send_error(res, 400, e.what());
    } catch (const std::exception& e) {
        send_error(res, 500, e.what());
    }
}

inline json row_errors_json(const std::vector<RowError>& errors) {
    json out = json::array();
    for (const auto& e : errors) out.push_back({{"line", e.line}, {"message", e.message}});
    return out;
}

inline std::vector<CellValue> cells_from_json(const Metadata& m, const json& body) {
    const json& values = body.contains("values") ? body.at("values") : body;
    std::vector<CellValue> cells;
    if (values.is_array()) {
        if (values.size() != m.size()) throw DomainError("row has the wrong number of cells");
        for (std::size_t k = 0; k < m.size(); ++k) cells.push_back(cell_from_json(m.attributes[k], values[k]));
    } else if (values.is_object()) {
        for (const auto& [name, _] : values.items()) m.require_index(name);
        for (const auto& a : m.attributes) {
            auto it = values.find(a.name);
            cells.push_back(it == values.end() ? CellValue{Missing{}} : cell_from_json(a, *it));
        }
    } else {
        throw BadRequest("row body must be an array of values or an attribute-keyed object");
    }
    return cells;
}

inline json labels_json(const Dataset& d, const Projection& p) {
    json labels = json::array();
    const auto cls = d.metadata.class_index();
    for (auto id : p.row_ids) {
        auto i = d.row_index(id);
        const auto* t = (cls && i) ? std::get_if<Nominal>(&d.rows[*i][*cls]) : nullptr;
        labels.push_back(t ? json(t->token) : json(nullptr));
    }
    return labels;
}

inline json projection_json(const Session& s) {
    const auto& p = s.require_projection();
    json j = to_json(p);
    j["labels"] = labels_json(s.dataset(), p);
    j["render"] = {{"point_radius", s.options().render.point_radius}, {"alpha", s.options().render.alpha}};
    return j;
}

}  // namespace service_detail

/**
 * @brief Route table over a SessionStore.
 *
 * Requests that change a session hold its exclusive lock; pure reads share it.
 */
class Service {
public:
    explicit Service(ServiceConfig config = {}) : config_(std::move(config)) {}

    SessionStore& store() noexcept { return store_; }

    void install(httplib::Server& svr) {
        using namespace service_detail;
        using httplib::Request;
        using httplib::Response;

        svr.set_post_routing_handler([](const Request&, Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
        });
        svr.Options(R"(/.*)", [](const Request&, Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, DELETE, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });

        svr.Post("/sessions", [this](const Request& req, Response& res) {
            guarded(res, [&] { create_session(req, res); });
        });

        svr.Delete("/sessions/:id", [this](const Request& req, Response& res) {
            guarded(res, [&] {
                if (!store_.erase(req.path_params.at("id"))) throw NotFound("no session '" + req.path_params.at("id") + "'");
                send(res, {{"deleted", req.path_params.at("id")}});
            });
        });

        read(svr, "Get", "/sessions/:id/metadata", [](const Session& s, const Request&, Response& res) {
            send(res, to_json(s.dataset().metadata));
        });

        write(svr, "Patch", "/sessions/:id/metadata", [](Session& s, const Request& req, Response& res) {
            s.set_metadata(patch_metadata(s.dataset().metadata, parse_body(req)));
            send(res, to_json(s.dataset().metadata));
        });

        read(svr, "Get", "/sessions/:id/rows", [](const Session& s, const Request& req, Response& res) {
            const auto& d = s.dataset();
            const auto offset = query_size(req, "offset", 0);
            const auto limit = query_size(req, "limit", 100);
            json rows = json::array();
            for (std::size_t i = offset; i < d.size() && i - offset < limit; ++i) rows.push_back(row_to_json(d, i));
            json names = json::array();
            for (const auto& a : d.metadata.attributes) names.push_back(a.name);
            send(res, {{"total", d.size()}, {"offset", offset}, {"attributes", names}, {"rows", rows}});
        });

        write(svr, "Put", "/sessions/:id/rows/:row_id", [](Session& s, const Request& req, Response& res) {
            const auto id = parse_row_id(req.path_params.at("row_id"));
            s.put_row(id, cells_from_json(s.dataset().metadata, parse_body(req)));
            send(res, row_to_json(s.dataset(), *s.dataset().row_index(id)));
        });

        write(svr, "Delete", "/sessions/:id/rows/:row_id", [](Session& s, const Request& req, Response& res) {
            const auto id = parse_row_id(req.path_params.at("row_id"));
            if (!s.dataset().row_index(id)) throw NotFound("no row with id " + std::to_string(id));
            s.delete_row(id);
            send(res, {{"deleted", id}, {"rows", s.dataset().size()}});
        });

        write(svr, "Post", "/sessions/:id/impute", [](Session& s, const Request& req, Response& res) {
            const auto body = parse_body(req);
            auto result = impute_missing(s.dataset(), parse_impute(body.value("strategy", std::string("drop"))));
            json filled = json::array();
            for (const auto& c : result.report.filled)
                filled.push_back({{"row_id", c.row_id}, {"attribute", c.attribute}, {"value", to_json(c.value)}});
            s.replace_dataset(std::move(result.dataset));
            send(res, {{"filled", filled}, {"dropped", result.report.dropped}, {"rows", s.dataset().size()}});
        });

        write(svr, "Post", "/sessions/:id/project", [](Session& s, const Request& req, Response& res) {
            apply_options(s, parse_body(req));
            s.run_projection();
            send(res, projection_json(s));
        });

        read(svr, "Get", "/sessions/:id/projection", [](const Session& s, const Request&, Response& res) {
            send(res, projection_json(s));
        });

        write(svr, "Post", "/sessions/:id/selection", [](Session& s, const Request& req, Response& res) {
            const auto body = parse_body(req);
            std::vector<SelectionPolygon> polygons;
            for (const auto& p : body.at("polygons")) polygons.push_back(polygon_from_json(p));
            const auto mode_name = body.value("mode", std::string("replace"));
            SelectionMode mode;
            if (mode_name == "replace") mode = SelectionMode::replace;
            else if (mode_name == "add") mode = SelectionMode::add;
            else throw BadRequest("selection mode must be 'replace' or 'add'");
            const auto selected = apply_selection(s, polygons, mode);
            send(res, {{"selected", selected}, {"count", selected.size()}});
        });

        read(svr, "Get", "/sessions/:id/selection", [](const Session& s, const Request&, Response& res) {
            send(res, {{"selected", s.selection()}, {"count", s.selection().size()}});
        });

        write(svr, "Post", "/sessions/:id/crop", [](Session& s, const Request&, Response& res) {
            crop(s);
            send(res, {{"rows", s.dataset().size()}, {"row_ids", s.dataset().row_ids}});
        });

        write(svr, "Post", "/sessions/:id/delete-selected", [](Session& s, const Request&, Response& res) {
            delete_selected(s);
            send(res, {{"rows", s.dataset().size()}, {"row_ids", s.dataset().row_ids}});
        });

        read(svr, "Get", "/sessions/:id/object/:row_id", [](const Session& s, const Request& req, Response& res) {
            const auto id = parse_row_id(req.path_params.at("row_id"));
            const auto& d = s.dataset();
            auto i = d.row_index(id);
            if (!i) throw NotFound("no row with id " + std::to_string(id));
            json pairs = json::array();
            for (std::size_t k = 0; k < d.metadata.size(); ++k) {
                const auto& a = d.metadata.attributes[k];
                if (a.skip) continue;
                pairs.push_back({{"attribute", a.name}, {"value", to_json(d.rows[*i][k])}});
            }
            send(res, {{"row_id", id}, {"pairs", pairs}});
        });

        read(svr, "Get", "/sessions/:id/hit", [](const Session& s, const Request& req, Response& res) {
            const auto hit = hit_test(s.require_projection(), {query_double(req, "x"), query_double(req, "y")},
                                      query_double(req, "threshold"));
            send(res, {{"row_id", hit ? json(*hit) : json(nullptr)}});
        });

        read(svr, "Get", "/sessions/:id/viewport", [](const Session& s, const Request& req, Response& res) {
            const auto& p = s.require_projection();
            const auto w = query_double(req, "width"), h = query_double(req, "height");
            const auto margin = query_double(req, "margin", 0.0);
            const auto t = fit_viewport(p, w, h, margin);
            json points = json::array();
            for (const auto& q : viewport_transform(p, w, h, margin)) points.push_back({q.x, q.y});
            send(res, {{"scale", t.scale}, {"offset_x", t.offset_x}, {"offset_y", t.offset_y}, {"row_ids", p.row_ids},
                       {"points", points}});
        });

        write(svr, "Get", "/sessions/:id/stats", [](Session& s, const Request&, Response& res) {
            const auto& d = s.dataset();
            json out = {{"rows", d.size()}, {"attributes", summaries_json(d)}, {"clusters", nullptr}};
            if (d.metadata.class_index() && d.size() > 0) {
                const auto& idx = s.ensure_indexed();
                if (idx.has_missing()) {
                    out["warning"] = "dataset has missing values; impute before computing cluster statistics";
                } else {
                    const Projection* p = s.projection() ? &*s.projection() : nullptr;
                    out["clusters"] = to_json(before_after_report(d, idx, p));
                }
            }
            send(res, out);
        });

        read(svr, "Post", "/sessions/:id/export", [](const Session& s, const Request& req, Response& res) {
            const auto body = parse_body(req);
            const auto files = export_dataset(s.dataset(), parse_export_format(body.value("format", std::string("data_names"))));
            send(res, {{"files", files}});
        });
    }

private:
    using ReadFn = std::function<void(const Session&, const httplib::Request&, httplib::Response&)>;
    using WriteFn = std::function<void(Session&, const httplib::Request&, httplib::Response&)>;

    std::shared_ptr<SessionStore::Entry> entry(const httplib::Request& req) const {
        const auto& id = req.path_params.at("id");
        auto e = store_.find(id);
        if (!e) throw NotFound("no session '" + id + "'");
        return e;
    }

    static void route(httplib::Server& svr, const std::string& method, const std::string& pattern,
                      httplib::Server::Handler h) {
        if (method == "Get") svr.Get(pattern, std::move(h));
        else if (method == "Post") svr.Post(pattern, std::move(h));
        else if (method == "Put") svr.Put(pattern, std::move(h));
        else if (method == "Patch") svr.Patch(pattern, std::move(h));
        else if (method == "Delete") svr.Delete(pattern, std::move(h));
    }

    void read(httplib::Server& svr, const std::string& method, const std::string& pattern, ReadFn fn) {
        route(svr, method, pattern, [this, fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
            service_detail::guarded(res, [&] {
                auto e = entry(req);
                std::shared_lock lock(e->mutex);
                fn(e->session, req, res);
            });
        });
    }

    void write(httplib::Server& svr, const std::string& method, const std::string& pattern, WriteFn fn) {
        route(svr, method, pattern, [this, fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
            service_detail::guarded(res, [&] {
                auto e = entry(req);
                std::unique_lock lock(e->mutex);
                fn(e->session, req, res);
            });
        });
    }

    /// Resolves `rel` under the data directory, refusing anything outside it.
    std::string read_under_data_dir(const std::string& rel) const {
        namespace fs = std::filesystem;
        const fs::path p(rel);
        if (p.is_absolute()) throw BadRequest("path '" + rel + "' must be relative to the data directory");
        const auto root = fs::weakly_canonical(config_.data_dir);
        const auto full = fs::weakly_canonical(root / p);
        auto [r, f] = std::mismatch(root.begin(), root.end(), full.begin(), full.end());
        if (r != root.end()) throw BadRequest("path '" + rel + "' escapes the data directory");
        if (!fs::is_regular_file(full)) throw NotFound("no file '" + rel + "'");
        return read_file(full);
    }

    void create_session(const httplib::Request& req, httplib::Response& res) {
        std::string data_text, names_text;
        if (req.is_multipart_form_data()) {
            if (!req.has_file("data") || !req.has_file("names"))
                throw BadRequest("multipart upload needs 'data' and 'names' parts");
            data_text = req.get_file_value("data").content;
            names_text = req.get_file_value("names").content;
        } else {
            const auto body = service_detail::parse_body(req);
            if (body.contains("data_path") || body.contains("names_path")) {
                data_text = read_under_data_dir(body.at("data_path").get<std::string>());
                names_text = read_under_data_dir(body.at("names_path").get<std::string>());
            } else if (body.contains("data") && body.contains("names")) {
                data_text = body.at("data").get<std::string>();
                names_text = body.at("names").get<std::string>();
            } else {
                throw BadRequest("body needs data_path and names_path, or inline data and names");
            }
        }
        auto m = parse_names(names_text);
        auto parsed = parse_data(data_text, m);
        const auto errors = service_detail::row_errors_json(parsed.errors);
        const auto rows = parsed.dataset.size();
        const auto id = store_.create(std::move(parsed.dataset));
        store_.find(id)->session.options().max_project_rows = config_.max_project_rows;
        service_detail::send(res, {{"id", id}, {"rows", rows}, {"row_errors", errors}}, 201);
    }

    static void apply_options(Session& s, const json& body) {
        auto& o = s.options();
        ProjectionOptions po = o.projection;
        if (body.contains("k")) po.k = body.at("k").get<std::size_t>();
        if (body.contains("pivot_iterations")) po.pivot_iterations = body.at("pivot_iterations").get<std::size_t>();
        if (body.contains("seed")) po.seed = body.at("seed").get<std::uint64_t>();
        if (body.contains("epsilon")) po.epsilon = body.at("epsilon").get<double>();
        po.validate();
        o.projection = po;

        IndexOptions io = o.index;
        bool index_changed = false;
        if (body.contains("znorm")) {
            io.znorm = parse_znorm(body.at("znorm").get<std::string>());
            index_changed = true;
        }
        if (body.contains("ordinal")) {
            io.ordinal = body.at("ordinal").get<std::vector<std::string>>();
            index_changed = true;
        }
        if (body.contains("exclude_class")) {
            io.exclude_class = body.at("exclude_class").get<bool>();
            index_changed = true;
        }
        if (index_changed) s.set_index_options(std::move(io));

        if (body.contains("point_radius")) o.render.point_radius = body.at("point_radius").get<double>();
        if (body.contains("alpha")) {
            const auto a = body.at("alpha").get<double>();
            if (!(a >= 0.0 && a <= 1.0)) throw DomainError("alpha must lie in [0, 1]");
            o.render.alpha = a;
        }
    }

    ServiceConfig config_;
    SessionStore store_;
};

/// Blocks serving on `port` until the process is stopped.
inline bool serve(const ServiceConfig& config, const std::string& host, int port) {
    httplib::Server svr;
    Service service(config);
    service.install(svr);
    return svr.listen(host, port);
}

}  // namespace fmx
