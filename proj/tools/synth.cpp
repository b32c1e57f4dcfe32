// satkit-synth: deterministic synthetic review fixture generator.
//
// Emits reviews.csv, register.csv, imd.csv, and ccg.csv shaped like the real
// inputs: each review is drawn from a five-theme mixture (two positive, two
// negative, one neutral) and its star ratings track the positive/negative
// theme balance, so every downstream stage has real signal to find.

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "satkit/csv.hpp"
#include "satkit/rng.hpp"

namespace {

using satkit::Rng;

// Marsaglia-Tsang gamma sampler (shape >= 0 handled via boost trick).
double sample_gamma(Rng& rng, double shape) {
    if (shape < 1.0) {
        const double u = rng.uniform();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> sample_dirichlet(Rng& rng, std::size_t k, double alpha) {
    std::vector<double> out(k);
    double sum = 0.0;
    for (auto& x : out) {
        x = sample_gamma(rng, alpha);
        sum += x;
    }
    for (auto& x : out) x /= sum;
    return out;
}

const std::vector<std::vector<std::string>> kThemeWords = {
    // strongly positive: staff and care quality
    {"excellent", "helpful", "friendly", "caring", "professional", "kindness", "brilliant",
     "wonderful", "thank", "grateful", "recommend", "fantastic", "polite", "supportive",
     "listened", "respectful", "amazing", "efficient", "thorough", "pleased"},
    // strongly negative: phone access
    {"phone", "ringing", "calling", "answer", "line", "busy", "engaged", "holding", "waiting",
     "impossible", "hours", "hang", "redial", "nobody", "unanswered", "frustrating", "useless",
     "morning", "telephone", "system"},
    // negative: appointments and reception
    {"appointment", "booking", "week", "unavailable", "slot", "emergency", "reception",
     "receptionist", "rude", "queue", "cancelled", "turned", "refused", "wait", "delay",
     "fortnight", "desk", "attitude", "unhelpful", "disappointing"},
    // neutral: treatment details
    {"doctor", "nurse", "blood", "test", "prescription", "medication", "referral", "hospital",
     "treatment", "diagnosis", "results", "checkup", "clinic", "examination", "symptoms",
     "specialist", "vaccination", "surgery", "condition", "review"},
    // neutral: practice logistics
    {"practice", "years", "family", "registered", "moved", "local", "parking", "clean", "modern",
     "building", "area", "village", "town", "patients", "nearby", "online", "website", "opening",
     "premises", "location"},
};

// Theme polarity loading for the rating model: +1, -1, -1, 0, 0.
const std::array<double, 5> kThemeSign = {1.0, -1.0, -1.0, 0.0, 0.0};

std::string pad(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*d", width, v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"satkit-synth: generate a synthetic review fixture"};
    std::string out_dir = "fixture";
    int n_reviews = 1000;
    int n_practices = 40;
    int n_ccgs = 8;
    int n_months = 24;
    std::uint64_t seed = 7;
    app.add_option("-o,--out", out_dir, "output directory");
    app.add_option("-n,--reviews", n_reviews, "number of reviews");
    app.add_option("--practices", n_practices, "number of practices");
    app.add_option("--ccgs", n_ccgs, "number of CCGs");
    app.add_option("--months", n_months, "number of months from 2014-01");
    app.add_option("-s,--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    Rng rng(seed);

    // Practice deprivation profile nudges ratings so the panel controls have
    // something to absorb.
    std::vector<double> practice_quality(static_cast<std::size_t>(n_practices));
    for (auto& q : practice_quality) q = 0.4 * rng.normal();

    {
        std::ofstream out(fs::path(out_dir) / "reviews.csv", std::ios::trunc);
        satkit::CsvWriter w(out);
        w.row({"review_id", "practice_id", "posted_date", "text", "r_phone", "r_appt", "r_dignity",
               "r_involved", "r_recommend", "r_info"});
        for (int i = 0; i < n_reviews; ++i) {
            const int practice = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_practices)));
            const int month_idx = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_months)));
            const std::string month = std::to_string(2014 + month_idx / 12) + "-" + pad(1 + month_idx % 12, 2);

            const auto theta = sample_dirichlet(rng, kThemeWords.size(), 0.3);
            const int length = 15 + static_cast<int>(rng.uniform_index(36));
            std::string text;
            double signal = 0.0;
            for (std::size_t t = 0; t < theta.size(); ++t) signal += kThemeSign[t] * theta[t];
            for (int wi = 0; wi < length; ++wi) {
                double u = rng.uniform();
                std::size_t theme = 0;
                double cum = theta[0];
                while (cum < u && theme + 1 < theta.size()) cum += theta[++theme];
                const auto& words = kThemeWords[theme];
                if (!text.empty()) text += " ";
                text += words[rng.uniform_index(words.size())];
                if (wi > 0 && wi % 9 == 0) text += ".";
            }

            std::vector<std::string> row = {"r" + pad(i + 1, 6), "p" + pad(practice + 1, 3), month,
                                            text};
            for (std::size_t q = 0; q < 6; ++q) {
                if (rng.uniform() < 0.08) {
                    row.push_back("");  // missing rating
                    continue;
                }
                const double raw = 3.0 + 2.2 * signal +
                                   practice_quality[static_cast<std::size_t>(practice)] +
                                   0.6 * rng.normal();
                const int stars = std::min(5, std::max(1, static_cast<int>(std::lround(raw))));
                row.push_back(std::to_string(stars));
            }
            w.row(row);
        }
    }

    {
        std::ofstream reg_out(fs::path(out_dir) / "register.csv", std::ios::trunc);
        std::ofstream imd_out(fs::path(out_dir) / "imd.csv", std::ios::trunc);
        satkit::CsvWriter reg(reg_out);
        satkit::CsvWriter imd(imd_out);
        reg.row({"practice_id", "lsoa", "patients"});
        imd.row({"lsoa", "imd_score"});
        int lsoa_id = 0;
        for (int pr = 0; pr < n_practices; ++pr) {
            const int n_lsoas = 2 + static_cast<int>(rng.uniform_index(3));
            for (int l = 0; l < n_lsoas; ++l) {
                const std::string lsoa = "E" + pad(++lsoa_id, 5);
                reg.row({"p" + pad(pr + 1, 3), lsoa,
                         std::to_string(500 + rng.uniform_index(4500))});
                imd.row({lsoa, satkit::format_double(1.0 + 9.0 * rng.uniform())});
            }
        }
    }

    {
        std::ofstream out(fs::path(out_dir) / "ccg.csv", std::ios::trunc);
        satkit::CsvWriter w(out);
        w.row({"practice_id", "ccg_id"});
        for (int pr = 0; pr < n_practices; ++pr) {
            w.row({"p" + pad(pr + 1, 3), "ccg" + pad(pr % n_ccgs + 1, 2)});
        }
    }

    std::fprintf(stderr, "satkit-synth: wrote %d reviews for %d practices to %s\n", n_reviews,
                 n_practices, out_dir.c_str());
    return 0;
}
