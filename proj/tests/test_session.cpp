#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "fmx/session.hpp"
#include "oracles.hpp"

using namespace fmx;

namespace {

SelectionPolygon rect(double x0, double y0, double x1, double y1) {
    return {{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

Projection grid_projection(const std::vector<Point2>& pts, RowId first = 0) {
    Projection p;
    p.dims = 2;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        p.row_ids.push_back(first + static_cast<RowId>(i));
        p.coords.push_back(pts[i].x);
        p.coords.push_back(pts[i].y);
    }
    return p;
}

Session projected_heart() {
    Session s("t", heart());
    s.options().projection.seed = 42;
    s.run_projection();
    return s;
}

}  // namespace

TEST(Contains, RectangleIsHalfOpen) {
    const auto r = rect(0, 0, 2, 1);
    EXPECT_TRUE(contains(r, {0, 0}));
    EXPECT_TRUE(contains(r, {1, 0.5}));
    EXPECT_TRUE(contains(r, {0, 0.999}));
    EXPECT_FALSE(contains(r, {2, 0.5}));
    EXPECT_FALSE(contains(r, {1, 1}));
    EXPECT_FALSE(contains(r, {-0.001, 0.5}));
}

TEST(Contains, MatchesRectangleOracle) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    std::uniform_int_distribution<int> g(-3, 3);
    for (int trial = 0; trial < 2000; ++trial) {
        double x0 = g(rng), x1 = g(rng), y0 = g(rng), y1 = g(rng);
        if (x0 == x1 || y0 == y1) continue;
        if (x0 > x1) std::swap(x0, x1);
        if (y0 > y1) std::swap(y0, y1);
        // Grid points land on edges and corners often.
        const Point2 p = trial % 2 ? Point2{u(rng), u(rng)} : Point2{double(g(rng)), double(g(rng))};
        EXPECT_EQ(contains(rect(x0, y0, x1, y1), p), oracle::in_rect(p.x, p.y, x0, y0, x1, y1))
            << p.x << "," << p.y << " in " << x0 << "," << y0 << "," << x1 << "," << y1;
    }
}

TEST(Contains, EvenOddForSelfIntersecting) {
    // Bow tie: two triangles meeting at (1, 1).
    const SelectionPolygon bow{{{0, 0}, {2, 2}, {2, 0}, {0, 2}}};
    EXPECT_TRUE(contains(bow, {1.8, 1}));
    EXPECT_TRUE(contains(bow, {0.2, 1}));
    EXPECT_FALSE(contains(bow, {1, 0.2}));
}

TEST(Contains, PolygonValidation) {
    EXPECT_THROW(SelectionPolygon({{{0, 0}, {1, 1}}}).validate(), DomainError);
    EXPECT_THROW(SelectionPolygon({{{0, 0}, {1, 1}, {NAN, 0}}}).validate(), DomainError);
}

TEST(HitTest, NearestWithinThreshold) {
    const auto p = grid_projection({{0, 0}, {3, 4}, {1, 0}, {-1, 0}}, 10);
    EXPECT_EQ(hit_test(p, {0.1, 0}, 0.5), RowId(10));
    EXPECT_EQ(hit_test(p, {3, 3.5}, 0.5), RowId(11));
    EXPECT_FALSE(hit_test(p, {10, 10}, 1).has_value());
    // (0, 0) is 1 from both 12 and 13; the lower id wins.
    EXPECT_EQ(hit_test(grid_projection({{1, 0}, {-1, 0}}, 12), {0, 0}, 1.0), RowId(12));
    EXPECT_EQ(hit_test(p, {2, 0}, 1.0), RowId(12));
}

TEST(Viewport, FitsAndCenters) {
    const auto p = grid_projection({{0, 0}, {2, 1}});
    const auto t = fit_viewport(p, 220, 120, 10);
    EXPECT_DOUBLE_EQ(t.scale, 100.0);
    const auto pts = viewport_transform(p, 220, 120, 10);
    EXPECT_DOUBLE_EQ(pts[0].x, 10);
    EXPECT_DOUBLE_EQ(pts[0].y, 10);
    EXPECT_DOUBLE_EQ(pts[1].x, 210);
    EXPECT_DOUBLE_EQ(pts[1].y, 110);
    const auto back = t.invert(pts[1]);
    EXPECT_DOUBLE_EQ(back.x, 2);
    EXPECT_DOUBLE_EQ(back.y, 1);
}

TEST(Viewport, AspectPreservedAndDegenerate) {
    const auto wide = fit_viewport(grid_projection({{0, 0}, {10, 1}}), 100, 100, 0);
    EXPECT_DOUBLE_EQ(wide.scale, 10.0);
    EXPECT_DOUBLE_EQ(wide.apply({5, 0.5}).y, 50.0);
    const auto same = viewport_transform(grid_projection({{3, 3}, {3, 3}}), 100, 50, 5);
    EXPECT_DOUBLE_EQ(same[0].x, 50);
    EXPECT_DOUBLE_EQ(same[0].y, 25);
    EXPECT_THROW(fit_viewport(grid_projection({{0, 0}}), 10, 10, 5), DomainError);
}

TEST(Selection, ReplaceAndAdd) {
    auto s = projected_heart();
    const auto& p = *s.projection();
    const auto all = apply_selection(s, {rect(-1e9, -1e9, 1e9, 1e9)});
    EXPECT_EQ(all.size(), p.size());
    const auto a = view_point(p, 0), b = view_point(p, 1);
    const auto first = apply_selection(s, {rect(a.x, a.y, a.x + 1e-9, a.y + 1e-9)});
    EXPECT_TRUE(first.contains(0));
    const auto second = apply_selection(s, {rect(b.x, b.y, b.x + 1e-9, b.y + 1e-9)}, SelectionMode::add);
    EXPECT_TRUE(second.contains(0));
    EXPECT_TRUE(second.contains(1));
    const auto replaced = apply_selection(s, {rect(b.x, b.y, b.x + 1e-9, b.y + 1e-9)});
    EXPECT_FALSE(replaced.contains(0));
}

TEST(Selection, NeedsProjection) {
    Session s("t", heart());
    EXPECT_THROW(apply_selection(s, {rect(0, 0, 1, 1)}), StateError);
    EXPECT_THROW(crop(s), StateError);
}

TEST(Selection, CropAndDeletePartitionRows) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = projected_heart();
        const auto ids = s.dataset().row_ids;
        std::set<RowId> sel, rest;
        for (auto id : ids) (rng() % 3 == 0 ? sel : rest).insert(id);
        if (sel.empty() || rest.empty()) continue;

        auto cropped = s;
        cropped.set_selection(sel);
        crop(cropped);
        auto deleted = s;
        deleted.set_selection(sel);
        delete_selected(deleted);
        auto complement = s;
        complement.set_selection(rest);
        crop(complement);

        EXPECT_EQ(std::set<RowId>(cropped.dataset().row_ids.begin(), cropped.dataset().row_ids.end()), sel);
        EXPECT_EQ(deleted.dataset().row_ids, complement.dataset().row_ids);
        EXPECT_EQ(deleted.dataset().rows, complement.dataset().rows);
        EXPECT_EQ(cropped.dataset().size() + deleted.dataset().size(), ids.size());
        EXPECT_FALSE(cropped.projection().has_value());
        EXPECT_TRUE(cropped.selection().empty());
    }
}

TEST(Session, ChangesInvalidateCaches) {
    auto s = projected_heart();
    const auto v = s.version();
    s.set_selection({1, 2});
    s.delete_row(3);
    EXPECT_GT(s.version(), v);
    EXPECT_FALSE(s.projection().has_value());
    EXPECT_FALSE(s.indexed().has_value());
    EXPECT_TRUE(s.selection().empty());
    EXPECT_THROW(s.require_projection(), StateError);
    EXPECT_THROW(s.delete_row(3), DomainError);
    s.run_projection();
    EXPECT_FALSE(s.projection()->index_of(3).has_value());
    s.set_index_options({});
    EXPECT_FALSE(s.projection().has_value());
}

TEST(Session, RowCapAndMinimum) {
    Session s("t", heart());
    s.options().max_project_rows = 10;
    EXPECT_THROW(s.run_projection(), StateError);
    Metadata m;
    m.attributes.push_back({"x", AttributeKind::continuous});
    Session one("u", Dataset{m, {{Continuous{1}}}, {0}});
    EXPECT_THROW(one.run_projection(), StateError);
}

TEST(Session, SetMetadataRetypes) {
    Session s("t", heart());
    auto m = s.dataset().metadata;
    m.attributes[11].kind = AttributeKind::nominal;  // ca
    m.attributes[11].domain = {"0", "1", "2", "3"};
    s.set_metadata(m);
    EXPECT_EQ(std::get<Nominal>(s.dataset().rows[3][11]).token, "3");
    m.attributes[11].domain = {"0", "1"};
    EXPECT_THROW(s.set_metadata(m), DomainError);
    EXPECT_EQ(s.dataset().metadata.attributes[11].domain.size(), 4u);
}

TEST(Session, PutRow) {
    Session s("t", load_dataset(fixture("animals.data"), fixture("animals.names")));
    auto row = s.dataset().rows[0];
    row[0] = Nominal{"wolf"};
    s.put_row(0, row);
    EXPECT_EQ(std::get<Nominal>(s.dataset().rows[0][0]).token, "wolf");
    EXPECT_TRUE(s.dataset().metadata.attributes[0].domain_index("wolf").has_value());
    EXPECT_FALSE(s.dataset().metadata.attributes[0].closed_domain());
    s.put_row(100, row);
    EXPECT_EQ(s.dataset().row_ids.back(), RowId(100));
    row[1] = Nominal{"shell"};
    EXPECT_THROW(s.put_row(1, row), DomainError);
    row.pop_back();
    EXPECT_THROW(s.put_row(1, row), DomainError);
}

TEST(Store, CreateFindErase) {
    SessionStore store;
    const auto a = store.create(heart());
    const auto b = store.create(heart());
    EXPECT_NE(a, b);
    EXPECT_EQ(store.size(), 2u);
    ASSERT_TRUE(store.find(a));
    EXPECT_EQ(store.find(a)->session.id(), a);
    EXPECT_TRUE(store.erase(a));
    EXPECT_FALSE(store.erase(a));
    EXPECT_FALSE(store.find(a));
}
