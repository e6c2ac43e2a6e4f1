#include "intent/synth.hpp"

#include <ostream>
#include <random>

#include <json.hpp>

#include "intent/labels.hpp"

namespace intent {

namespace {

struct Topic {
  const char* product;
  std::vector<const char*> nouns;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {"Windows", {"update", "driver", "start menu", "taskbar", "login screen", "restore point", "blue screen"}},
      {"Office", {"license", "installer", "ribbon", "template", "macro", "activation key", "document"}},
      {"Outlook", {"inbox", "calendar", "signature", "mailbox", "attachment", "rule", "contact list"}},
      {"Skype", {"microphone", "camera", "call", "contact", "status", "chat history", "webcam"}},
      {"Xbox", {"controller", "console", "game pass", "profile", "download", "party chat", "achievement"}},
      {"Bing", {"search bar", "homepage", "rewards", "wallpaper", "toolbar", "search history", "browser"}},
  };
  return t;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return uniform_index(rng_, n); }
  bool chance(double p) { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) { return v[index(v.size())]; }

  std::string fill(std::string tmpl, const Topic& topic) {
    replace_all(tmpl, "{p}", topic.product);
    while (tmpl.find("{n}") != std::string::npos) {
      tmpl.replace(tmpl.find("{n}"), 3, pick(topic.nouns));
    }
    return tmpl;
  }

 private:
  static void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) {
      s.replace(p, from.size(), to);
    }
  }
  std::mt19937_64 rng_;
};

const std::vector<std::string> kOq = {
    "How do I fix the {n} in {p}? It stopped working after the last update.",
    "Why does my {n} keep crashing in {p}? I cannot use it at all.",
    "What is the best way to reset the {n} in {p}?",
    "Where can I find the {n} settings in {p}? The option seems to be gone.",
    "When I open {p} the {n} disappears. How can I get it back?",
    "Who can help me with the {n}? {p} shows an error every time.",
};
const std::vector<std::string> kRq = {
    "I have the same problem with the {n}. Did anyone find a solution?",
    "Same issue here, my {n} in {p} does the exact same thing.",
    "I am seeing a similar problem with {p}. Is there any fix yet?",
};
const std::vector<std::string> kCq = {
    "Do you mean the {n} in the desktop version of {p} or the web version?",
    "Just to clarify, does the {n} fail for every account or only one?",
    "Is the {n} missing, or does it show up empty?",
};
const std::vector<std::string> kFd = {
    "I am running {p} on a new laptop and the {n} was fine until yesterday.",
    "The error code is 0x80070005 and it appears right after the {n} loads.",
    "It is the desktop version. I already reinstalled the {n} twice.",
    "My account is a work account and the {n} is managed by my company.",
};
const std::vector<std::string> kFq = {
    "Also, is there a way to back up the {n} before I try that?",
    "One more question: will this reset my {n} too?",
    "Can I do the same thing for the {n} on my phone?",
};
const std::vector<std::string> kIr = {
    "Could you tell me which version of {p} you are using?",
    "Please post a screenshot of the {n} error so we can take a look.",
    "Can you share the exact error message you see on the {n}?",
};
const std::vector<std::string> kPa = {
    "Try to open the {n} settings, select reset, and restart {p}. This usually clears the problem.",
    "Please run the troubleshooter for {p}: go to settings, choose the {n} section and follow the steps.",
    "You can remove the {n} and add it again from the control panel, then sign in to {p} again.",
    "Clear the cache of {p} and then repair the {n} from the apps list. Let us know the result.",
};
const std::vector<std::string> kPf = {
    "Thanks, that worked! The {n} is back.",
    "Thank you so much, resetting the {n} fixed it!",
    "That did it, thanks a lot! {p} runs fine now.",
};
const std::vector<std::string> kNf = {
    "I tried that but it did not work. The {n} is still broken.",
    "Unfortunately that doesn't help, {p} still crashes on the {n}.",
    "I did that already and it does not fix the {n}.",
};
const std::vector<std::string> kGg = {"Hi everyone,", "Hello,", "Good morning,", "Thanks in advance."};
const std::vector<std::string> kJk = {"lol this forum is so slow today", "asdf test post please ignore"};

struct Turn {
  Actor actor;
  int author;  // 0 = starter
  std::string text;
  std::string tags;
};

void add(Turn& t, const std::string& text, const char* tag) {
  if (!t.text.empty()) t.text += ' ';
  t.text += text;
  if (!t.tags.empty()) t.tags += ' ';
  t.tags += tag;
}

}  // namespace

Corpus synth_corpus(const SynthConfig& cfg) {
  if (cfg.categories.empty()) throw Error("synthetic corpus needs at least one category");
  if (cfg.min_turns < 2 || cfg.max_turns < cfg.min_turns) throw Error("synthetic corpus: bad turn range");
  Gen g(cfg.seed);
  Corpus corpus;
  corpus.name = "synthetic";
  for (std::size_t di = 0; di < cfg.dialogs; ++di) {
    const std::string& category = cfg.categories[di % cfg.categories.size()];
    const Topic* topic = &topics().front();
    for (const auto& t : topics()) {
      if (category == t.product) topic = &t;
    }
    const std::size_t turns = cfg.min_turns + g.index(cfg.max_turns - cfg.min_turns + 1);
    std::vector<Turn> out;

    Turn first{Actor::seeker, 0, "", ""};
    if (g.chance(0.3)) add(first, g.pick(kGg), "GG");
    add(first, g.fill(g.pick(kOq), *topic), "OQ");
    if (g.chance(0.25)) add(first, g.fill(g.pick(kFd), *topic), "FD");
    out.push_back(first);

    std::string last = "OQ";
    int next_author = 1;
    while (out.size() < turns) {
      const bool seeker_turn = out.back().actor == Actor::agent;
      Turn t{seeker_turn ? Actor::seeker : Actor::agent, 0, "", ""};
      if (seeker_turn) {
        if (g.chance(0.12)) {
          t.author = next_author++;
          add(t, g.fill(g.pick(kRq), *topic), "RQ");
        } else if (last == "CQ" || last == "IR") {
          add(t, g.fill(g.pick(kFd), *topic), "FD");
          if (g.chance(0.2)) add(t, g.fill(g.pick(kFq), *topic), "FQ");
        } else if (g.chance(0.45)) {
          add(t, g.fill(g.pick(kPf), *topic), "PF");
          if (g.chance(0.3)) add(t, g.pick(kGg), "GG");
        } else if (g.chance(0.75)) {
          add(t, g.fill(g.pick(kNf), *topic), "NF");
          if (g.chance(0.5)) add(t, g.fill(g.pick(kFd), *topic), "FD");
        } else {
          add(t, g.fill(g.pick(kFq), *topic), "FQ");
        }
      } else {
        t.author = -(next_author++);
        const double r = static_cast<double>(g.index(1000)) / 1000.0;
        if (r < 0.2) {
          add(t, g.fill(g.pick(kCq), *topic), "CQ");
        } else if (r < 0.38) {
          add(t, g.fill(g.pick(kIr), *topic), "IR");
        } else if (r < 0.96) {
          add(t, g.fill(g.pick(kPa), *topic), "PA");
          if (g.chance(0.15)) add(t, g.fill(g.pick(kIr), *topic), "IR");
        } else {
          add(t, g.pick(kJk), "JK");
        }
      }
      last = t.tags.substr(0, 2);
      out.push_back(std::move(t));
    }
    if (g.chance(0.05)) out.back().tags += " O";

    Dialog d;
    d.dialog_id = std::to_string(100000 + di);
    d.title = g.fill(std::string("{p} {n} problem"), *topic);
    d.category = category;
    for (std::size_t i = 0; i < out.size(); ++i) {
      Utterance u;
      u.dialog_id = d.dialog_id;
      u.pos = static_cast<int>(i + 1);
      u.actor = out[i].actor;
      u.is_starter = out[i].actor == Actor::seeker && out[i].author == 0;
      u.text = out[i].text;
      u.raw_tags = out[i].tags;
      d.utterances.push_back(std::move(u));
    }
    corpus.dialogs.push_back(std::move(d));
  }
  return corpus;
}

void write_msdialog_json(std::ostream& out, const Corpus& corpus) {
  nlohmann::ordered_json root = nlohmann::ordered_json::object();
  for (const auto& d : corpus.dialogs) {
    nlohmann::ordered_json jd;
    jd["title"] = d.title;
    jd["category"] = d.category;
    auto utts = nlohmann::ordered_json::array();
    int other = 0;
    for (const auto& u : d.utterances) {
      nlohmann::ordered_json ju;
      ju["utterance_pos"] = u.pos;
      ju["actor_type"] = u.actor == Actor::seeker ? "User" : "Agent";
      ju["user_id"] = u.is_starter ? "starter" : "member" + std::to_string(++other);
      ju["utterance"] = u.text;
      ju["tags"] = u.raw_tags;
      utts.push_back(std::move(ju));
    }
    jd["utterances"] = std::move(utts);
    root[d.dialog_id] = std::move(jd);
  }
  out << root.dump(1) << '\n';
}

}  // namespace intent
