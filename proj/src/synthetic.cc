// Copyright 2026 The SDL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sdl/synthetic.h"

#include <algorithm>
#include <cmath>
#include <string_view>

#include "sdl/error.h"
#include "sdl/random.h"
#include "sdl/stats.h"

namespace sdl {
namespace {

constexpr int64_t kStartTs = 1546300800;  // 2019-01-01T00:00:00Z
constexpr int64_t kDay = 86400;

struct Template {
  std::string_view driver;
  std::string_view action;  // imperative verb phrase, lower case
};

// Slots: {name} {email} {phone} {date} {url} {num}.
constexpr Template kTemplates[] = {
    // documents
    {"Hi, I tried to upload my license but the app keeps failing.",
     "upload a clear photo of your license from the documents page"},
    {"How do I add my insurance card? My email is {email}",
     "add your insurance card under documents in the app"},
    {"I sent my registration on {date}, did you get it?",
     "send a clear photo of your registration so i can check it"},
    // background check
    {"Is my background check done yet? It has been {num} days.",
     "wait a few more days while the background check is processed"},
    {"My name is {name}, how long does the background check take?",
     "allow up to five business days for the background check"},
    {"Do you need my social security number for the check?",
     "enter your social security number on the consent page"},
    // inspection
    {"I need to do the inspection, where can I go near my house?",
     "visit any of these locations for a free inspection : {url}"},
    {"Can I do the vehicle inspection on {date}?",
     "book an inspection slot at the hub on that day"},
    {"My car failed the inspection, what now? Call me at {phone}",
     "fix the listed items and return for a second inspection"},
    // first trip
    {"I am ready to drive, how do I go online?",
     "tap the go online button in the driver app"},
    {"When can I take my first trip? Text me at {phone}",
     "go online this weekend to take your first trip"},
    {"Where should I drive to get riders? My page is {url}",
     "drive near downtown during rush hour to get more requests"},
};

constexpr std::string_view kMilestoneQuestions[] = {
    "Any update on my application?",
    "Did my documents go through?",
    "Is there anything else I need to do?",
};

constexpr std::string_view kMilestoneReplies[] = {
    "Hi {name}, this is {agent} from the onboarding team. Congrats - your "
    "background check is complete!",
    "Congratulations {name}! Your documents are approved!",
};

constexpr std::string_view kPolitenessPieces[] = {
    "Hi {name},",
    "Sorry for the delay.",
    "Thanks for your patience.",
};

constexpr std::string_view kPositivityPieces[] = {
    "Good luck!",
    "Have a wonderful day!",
    "We are happy to help!",
};

constexpr std::string_view kDomains[] = {"example.com", "mysite.org",
                                         "drivehub.net"};

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = char(s[0] - 'a' + 'A');
  return s;
}

std::string replace_all(std::string s, std::string_view key,
                        const std::string& value) {
  size_t pos = 0;
  while ((pos = s.find(key, pos)) != std::string::npos) {
    s.replace(pos, key.size(), value);
    pos += value.size();
  }
  return s;
}

struct DriverProfile {
  std::string id;
  std::string name;
  std::string email;
  double age = 0;
  int64_t signup_ts = 0;
  std::string city;
};

std::string fill_slots(std::string text, const DriverProfile& d,
                       const std::string& agent_name, Rng& rng) {
  char buf[64];
  if (text.find("{phone}") != std::string::npos) {
    std::snprintf(buf, sizeof(buf), "%03d %04d", 200 + int(rng.below(800)),
                  int(rng.below(10000)));
    text = replace_all(text, "{phone}", buf);
  }
  if (text.find("{date}") != std::string::npos) {
    std::snprintf(buf, sizeof(buf), "%02d/%02d", 1 + int(rng.below(12)),
                  1 + int(rng.below(28)));
    text = replace_all(text, "{date}", buf);
  }
  if (text.find("{num}") != std::string::npos) {
    text = replace_all(text, "{num}", std::to_string(2 + rng.below(12)));
  }
  if (text.find("{url}") != std::string::npos) {
    std::snprintf(buf, sizeof(buf), "https://%s/p/%d",
                  std::string(kDomains[rng.below(3)]).c_str(),
                  int(rng.below(1000)));
    text = replace_all(text, "{url}", buf);
  }
  text = replace_all(text, "{email}", d.email);
  text = replace_all(text, "{agent}", agent_name);
  text = replace_all(text, "{name}", d.name);
  return text;
}

// Standardized column, or zeros when the column is constant.
stats::Column z_or_zero(const stats::Column& x, bool log_first) {
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    return stats::Column(x.size(), 0.0);
  }
  return log_first ? stats::log_standardize(x) : stats::standardize(x);
}

}  // namespace

const std::array<std::string, 6>& engagement_covariates() {
  static const std::array<std::string, 6> kNames = {
      "driver_age",          "log_days_since_signup", "log_num_driver_msgs",
      "agent_msg_length",    "politeness",            "positivity"};
  return kNames;
}

void SyntheticSpec::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw PreconditionError(std::string(what) + " must lie in [0, 1]");
    }
  };
  prob(politeness_marker_rate, "politeness_marker_rate");
  prob(positivity_marker_rate, "positivity_marker_rate");
  prob(milestone_rate, "milestone_rate");
  prob(response_base_rate, "response_base_rate");
  prob(first_trip_base_rate, "first_trip_base_rate");
  if (n_drivers < 1) throw PreconditionError("n_drivers must be positive");
  if (min_pairs_per_driver < 1 || max_pairs_per_driver < min_pairs_per_driver) {
    throw PreconditionError("pairs_per_driver range must satisfy 1 <= min <= max");
  }
  if (response_coefficients.size() != 6 || first_trip_coefficients.size() != 6) {
    throw PreconditionError("engagement coefficient vectors need 6 entries");
  }
  if (!(driver_effect_sd >= 0.0)) {
    throw PreconditionError("driver_effect_sd must be non-negative");
  }
  if (n_cities < 1) throw PreconditionError("n_cities must be positive");
}

SyntheticCorpus generate_synthetic_corpus_detailed(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.rng_seed);
  const auto& names = default_names().names();
  SyntheticCorpus out;
  std::vector<double> driver_effect_response, driver_effect_trip;
  std::vector<size_t> driver_of_pair;

  for (int di = 0; di < spec.n_drivers; ++di) {
    DriverProfile d;
    char id[32];
    std::snprintf(id, sizeof(id), "d%05d", di);
    d.id = id;
    d.name = capitalize(names[rng.below(names.size())]);
    d.email = to_lower_ascii(d.name) + std::to_string(rng.below(100)) +
              "@mail.com";
    d.age = std::clamp(rng.normal(35.0, 10.0), 18.0, 75.0);
    d.age = std::round(d.age);
    d.signup_ts = kStartTs + static_cast<int64_t>(rng.below(60 * kDay));
    d.city = "city_" + std::to_string(rng.below(spec.n_cities));
    driver_effect_response.push_back(rng.normal(0.0, spec.driver_effect_sd));
    driver_effect_trip.push_back(rng.normal(0.0, spec.driver_effect_sd));
    const std::string agent_name = capitalize(names[rng.below(names.size())]);

    const int n_pairs =
        spec.min_pairs_per_driver +
        static_cast<int>(rng.below(spec.max_pairs_per_driver -
                                   spec.min_pairs_per_driver + 1));
    int64_t t = d.signup_ts + 60 + static_cast<int64_t>(rng.below(5 * kDay));
    for (int k = 0; k < n_pairs; ++k) {
      if (k > 0) t += kDay + static_cast<int64_t>(rng.below(3 * kDay));
      const int64_t reply_ts = t + 1 + static_cast<int64_t>(rng.below(3600));
      std::string driver_text, agent_text;
      int n_polite = 0, n_positive = 0;
      const bool milestone = rng.bernoulli(spec.milestone_rate);
      if (milestone) {
        driver_text = std::string(kMilestoneQuestions[rng.below(3)]);
        agent_text = std::string(kMilestoneReplies[rng.below(2)]);
        n_positive = 1;
      } else {
        const Template& tpl = kTemplates[rng.below(std::size(kTemplates))];
        driver_text = std::string(tpl.driver);
        std::vector<std::string> parts;
        const bool polite = rng.bernoulli(spec.politeness_marker_rate);
        const bool positive = rng.bernoulli(spec.positivity_marker_rate);
        if (polite) {
          bool use[3];
          do {
            for (bool& u : use) u = rng.bernoulli(0.5);
          } while (!(use[0] || use[1] || use[2]));
          for (int i = 0; i < 3; ++i) {
            if (use[i]) {
              parts.emplace_back(kPolitenessPieces[i]);
              ++n_polite;
            }
          }
          parts.push_back("Could you please " + std::string(tpl.action) + "?");
          ++n_polite;
        } else {
          parts.push_back(capitalize(std::string(tpl.action)) + ".");
        }
        if (positive) {
          bool use[3];
          do {
            for (bool& u : use) u = rng.bernoulli(0.5);
          } while (!(use[0] || use[1] || use[2]));
          for (int i = 0; i < 3; ++i) {
            if (use[i]) {
              parts.emplace_back(kPositivityPieces[i]);
              ++n_positive;
            }
          }
        }
        agent_text = join(parts);
      }
      driver_text = fill_slots(std::move(driver_text), d, agent_name, rng);
      agent_text = fill_slots(std::move(agent_text), d, agent_name, rng);

      MessagePair p;
      p.driver_id = d.id;
      p.driver_msg = make_utterance(driver_text, Speaker::kDriver, t);
      p.agent_msg = make_utterance(agent_text, Speaker::kAgent, reply_ts);
      p.driver_age = d.age;
      p.days_since_signup =
          static_cast<double>(reply_ts - d.signup_ts) / static_cast<double>(kDay);
      p.num_prior_driver_msgs = k;
      p.signup_city = d.city;
      out.pairs.push_back(std::move(p));
      out.politeness_markers.push_back(n_polite);
      out.positivity_markers.push_back(n_positive);
      out.milestone.push_back(milestone);
      driver_of_pair.push_back(static_cast<size_t>(di));
    }
  }

  // Outcomes need corpus-wide standardization, hence a second pass.
  const size_t n = out.pairs.size();
  stats::Column age(n), days(n), prior(n), length(n), polite(n), positive(n);
  for (size_t i = 0; i < n; ++i) {
    const auto& p = out.pairs[i];
    age[i] = p.driver_age;
    days[i] = p.days_since_signup;
    prior[i] = static_cast<double>(p.num_prior_driver_msgs);
    length[i] = static_cast<double>(p.agent_msg.tokens.size());
    polite[i] = out.politeness_markers[i];
    positive[i] = out.positivity_markers[i];
  }
  const std::array<stats::Column, 6> z = {
      z_or_zero(age, false),    z_or_zero(days, true),
      z_or_zero(prior, true),   z_or_zero(length, false),
      z_or_zero(polite, false), z_or_zero(positive, false)};
  for (size_t i = 0; i < n; ++i) {
    double pr = spec.response_base_rate + driver_effect_response[driver_of_pair[i]];
    double pt = spec.first_trip_base_rate + driver_effect_trip[driver_of_pair[i]];
    for (size_t k = 0; k < 6; ++k) {
      pr += spec.response_coefficients[k] * z[k][i];
      pt += spec.first_trip_coefficients[k] * z[k][i];
    }
    out.pairs[i].responded_24h = rng.bernoulli(std::clamp(pr, 0.02, 0.98));
    out.pairs[i].first_trip_7d = rng.bernoulli(std::clamp(pt, 0.02, 0.98));
  }
  return out;
}

std::vector<MessagePair> generate_synthetic_corpus(const SyntheticSpec& spec) {
  return generate_synthetic_corpus_detailed(spec).pairs;
}

bool is_milestone_message(const Utterance& agent_msg) {
  for (const auto& t : agent_msg.tokens) {
    if (t == "congrats" || t == "congratulations") return true;
  }
  return false;
}

bool has_question_mark(const Utterance& u) {
  return std::find(u.tokens.begin(), u.tokens.end(), "?") != u.tokens.end();
}

}  // namespace sdl
