#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fmx/data_io.hpp"
#include "fmx/dataset.hpp"
#include "fmx/fastmap.hpp"
#include "fmx/preprocess.hpp"

/**
 * @file session.hpp
 *
 * @brief Interactive exploration state: the current extract, its cached
 * encoding and projection, and the selection made on the 2D view.
 */

namespace fmx {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

/// Closed polygon in projection coordinates; the last vertex joins the first.
struct SelectionPolygon {
    std::vector<Point2> vertices;

    void validate() const {
        if (vertices.size() < 3) throw DomainError("selection polygon needs at least 3 vertices");
        for (const auto& v : vertices)
            if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw DomainError("selection polygon has a non-finite vertex");
    }
};

/**
 * Even-odd containment. An edge counts as crossed when it straddles the
 * horizontal line through `p` with the half-open rule (y_i > p.y) != (y_j > p.y)
 * and the crossing lies strictly right of `p`. For an axis-aligned rectangle
 * this makes the region [x0, x1) x [y0, y1): left and bottom edges are inside,
 * right and top edges are outside.
 */
inline bool contains(const SelectionPolygon& poly, Point2 p) {
    bool inside = false;
    const auto& v = poly.vertices;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double x_cross = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

/// Position of object `i` on the 2D view (second coordinate 0 when k = 1).
inline Point2 view_point(const Projection& proj, std::size_t i) {
    return {proj.x(i, 0), proj.dims > 1 ? proj.x(i, 1) : 0.0};
}

/// Nearest object within `threshold` of `cursor`; ties go to the lowest row id.
inline std::optional<RowId> hit_test(const Projection& proj, Point2 cursor, double threshold) {
    std::optional<RowId> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const auto p = view_point(proj, i);
        const double d = std::hypot(p.x - cursor.x, p.y - cursor.y);
        if (d > threshold) continue;
        if (d < best_d || (d == best_d && proj.row_ids[i] < *best)) {
            best_d = d;
            best = proj.row_ids[i];
        }
    }
    return best;
}

/// Uniform-scale affine map from projection coordinates to screen pixels.
struct ViewportTransform {
    double scale = 1.0;
    double offset_x = 0.0;
    double offset_y = 0.0;

    Point2 apply(Point2 p) const { return {p.x * scale + offset_x, p.y * scale + offset_y}; }
    Point2 invert(Point2 s) const { return {(s.x - offset_x) / scale, (s.y - offset_y) / scale}; }
};

/**
 * Fits the bounding box of the projection into the margin-inset
 * rectangle, preserving aspect ratio and centering the shorter extent.
 * A zero extent maps to the center line.
 */
inline ViewportTransform fit_viewport(const Projection& proj, double width, double height, double margin) {
    if (!(width > 2 * margin) || !(height > 2 * margin)) throw DomainError("viewport is smaller than its margins");
    const double w = width - 2 * margin, h = height - 2 * margin;
    if (proj.size() == 0) return {1.0, margin + w / 2, margin + h / 2};
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const auto p = view_point(proj, i);
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double ex = x1 - x0, ey = y1 - y0;
    double scale = 1.0;
    if (ex > 0 && ey > 0) scale = std::min(w / ex, h / ey);
    else if (ex > 0) scale = w / ex;
    else if (ey > 0) scale = h / ey;
    const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
    return {scale, margin + w / 2 - cx * scale, margin + h / 2 - cy * scale};
}

inline std::vector<Point2> viewport_transform(const Projection& proj, double width, double height, double margin) {
    const auto t = fit_viewport(proj, width, height, margin);
    std::vector<Point2> out;
    out.reserve(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) out.push_back(t.apply(view_point(proj, i)));
    return out;
}

struct RenderHints {
    double point_radius = 3.0;
    double alpha = 0.5;
};

struct SessionOptions {
    ProjectionOptions projection;
    IndexOptions index;
    RenderHints render;
    /// Projection requests over more rows than this are refused.
    std::size_t max_project_rows = 20000;
};

enum class SelectionMode { replace, add };

/**
 * @brief One exploration session.
 *
 * Every change to the rows or the metadata drops the cached encoding and
 * projection and clears the selection, so statistics and selections never
 * see coordinates of a different dataset.
 */
class Session {
public:
    Session(std::string id, Dataset data) : id_(std::move(id)), data_(std::move(data)) { validate(data_); }

    const std::string& id() const noexcept { return id_; }
    const Dataset& dataset() const noexcept { return data_; }
    const std::set<RowId>& selection() const noexcept { return selection_; }
    const std::optional<Projection>& projection() const noexcept { return projection_; }
    const std::optional<IndexedDataset>& indexed() const noexcept { return indexed_; }
    const SessionOptions& options() const noexcept { return options_; }
    SessionOptions& options() noexcept { return options_; }
    std::uint64_t version() const noexcept { return version_; }

    void replace_dataset(Dataset d) {
        validate(d);
        data_ = std::move(d);
        invalidate();
    }

    /**
     * Swaps in new metadata and retypes every cell under it. Row ids are kept;
     * the change is refused when any row does not fit the new metadata.
     */
    void set_metadata(Metadata m) {
        validate(m);
        auto reparsed = parse_data(write_data(data_), m);
        if (!reparsed.ok())
            throw DomainError("metadata change rejected: " + reparsed.errors.front().message + " (row " +
                              std::to_string(data_.row_ids.at(reparsed.errors.front().line - 1)) + ")");
        reparsed.dataset.row_ids = data_.row_ids;
        data_ = std::move(reparsed.dataset);
        invalidate();
    }

    void put_row(RowId id, std::vector<CellValue> cells) {
        if (cells.size() != data_.metadata.size()) throw DomainError("row has the wrong number of cells");
        for (std::size_t k = 0; k < cells.size(); ++k)
            if (auto why = check_cell(data_.metadata.attributes[k], cells[k])) throw DomainError(*why);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            auto& a = data_.metadata.attributes[k];
            const auto* t = std::get_if<Nominal>(&cells[k]);
            if (t && a.kind == AttributeKind::nominal && !a.closed_domain() && !a.domain_index(t->token)) {
                a.open_domain = true;
                a.domain.push_back(t->token);
            }
        }
        if (auto i = data_.row_index(id)) {
            data_.rows[*i] = std::move(cells);
        } else {
            data_.rows.push_back(std::move(cells));
            data_.row_ids.push_back(id);
        }
        invalidate();
    }

    void delete_row(RowId id) {
        auto i = data_.row_index(id);
        if (!i) throw DomainError("no row with id " + std::to_string(id));
        data_.rows.erase(data_.rows.begin() + static_cast<std::ptrdiff_t>(*i));
        data_.row_ids.erase(data_.row_ids.begin() + static_cast<std::ptrdiff_t>(*i));
        invalidate();
    }

    /// Encodes the current rows with the session's index options (cached).
    const IndexedDataset& ensure_indexed() {
        if (!indexed_) indexed_ = index_dataset(data_, options_.index);
        return *indexed_;
    }

    const Projection& run_projection() {
        if (data_.size() > options_.max_project_rows)
            throw StateError("dataset too large to project: " + std::to_string(data_.size()) + " rows, limit " +
                             std::to_string(options_.max_project_rows));
        if (data_.size() < 2) throw StateError("projection needs at least 2 rows");
        projection_ = project(ensure_indexed(), options_.projection);
        selection_.clear();
        return *projection_;
    }

    const Projection& require_projection() const {
        if (!projection_) throw StateError("no current projection; run a projection first");
        return *projection_;
    }

    void set_selection(std::set<RowId> s) { selection_ = std::move(s); }

    /// Changing index options makes the cached encoding and projection stale.
    void set_index_options(IndexOptions opts) {
        options_.index = std::move(opts);
        indexed_.reset();
        projection_.reset();
        selection_.clear();
    }

private:
    void invalidate() {
        ++version_;
        indexed_.reset();
        projection_.reset();
        selection_.clear();
    }

    std::string id_;
    Dataset data_;
    std::optional<IndexedDataset> indexed_;
    std::optional<Projection> projection_;
    std::set<RowId> selection_;
    SessionOptions options_;
    std::uint64_t version_ = 0;
};

/// Selects the objects inside the union of `polygons` (each by the even-odd rule).
inline std::set<RowId> apply_selection(Session& s, const std::vector<SelectionPolygon>& polygons,
                                       SelectionMode mode = SelectionMode::replace) {
    const auto& proj = s.require_projection();
    for (const auto& poly : polygons) poly.validate();
    std::set<RowId> selected = mode == SelectionMode::add ? s.selection() : std::set<RowId>{};
    for (std::size_t i = 0; i < proj.size(); ++i) {
        const auto p = view_point(proj, i);
        for (const auto& poly : polygons)
            if (contains(poly, p)) {
                selected.insert(proj.row_ids[i]);
                break;
            }
    }
    s.set_selection(selected);
    return selected;
}

namespace session_detail {

inline void keep_rows(Session& s, bool keep_selected) {
    if (s.selection().empty()) throw StateError("nothing is selected");
    const auto& d = s.dataset();
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (s.selection().contains(d.row_ids[i]) == keep_selected) keep.push_back(i);
    s.replace_dataset(d.subset(keep));
}

}  // namespace session_detail

/// Keeps only the selected rows; the next projection runs on them alone.
inline void crop(Session& s) { session_detail::keep_rows(s, true); }

/// Removes the selected rows, typically outliers.
inline void delete_selected(Session& s) { session_detail::keep_rows(s, false); }

/**
 * @brief Sessions keyed by id, each guarded by its own reader/writer lock.
 *
 * Mutating calls on a session take the exclusive lock; reads share it.
 */
class SessionStore {
public:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        std::shared_mutex mutex;
        Session session;
    };

    std::string create(Dataset d) {
        std::lock_guard lock(mutex_);
        auto id = "s" + std::to_string(++counter_);
        sessions_.emplace(id, std::make_shared<Entry>(Session(id, std::move(d))));
        return id;
    }

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    bool erase(const std::string& id) {
        std::lock_guard lock(mutex_);
        return sessions_.erase(id) > 0;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::uint64_t counter_ = 0;
};

}  // namespace fmx
