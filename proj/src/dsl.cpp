#include "tmk/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace tmk {
namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok { ident, str, lbrace, rbrace, arrow, equals, dot, end, bad };

struct Token {
  Tok type = Tok::end;
  std::string text;   // identifier spelling or decoded string value
  SourceSpan span;
  std::string note;   // for bad tokens
};

class Lexer {
 public:
  Lexer(std::string_view src, std::string file)
      : src_(src), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_blank_();
      if (eof_()) {
        out.push_back(make_(Tok::end, "", 0));
        return out;
      }
      int line = line_, col = col_;
      char c = peek_();
      if (c == '{') {
        advance_();
        out.push_back(token_(Tok::lbrace, "{", line, col, 1));
      } else if (c == '}') {
        advance_();
        out.push_back(token_(Tok::rbrace, "}", line, col, 1));
      } else if (c == '=') {
        advance_();
        out.push_back(token_(Tok::equals, "=", line, col, 1));
      } else if (c == '.') {
        advance_();
        out.push_back(token_(Tok::dot, ".", line, col, 1));
      } else if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
        advance_();
        advance_();
        out.push_back(token_(Tok::arrow, "->", line, col, 2));
      } else if (c == '"') {
        out.push_back(lex_string_());
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos_;
        while (!eof_() && (std::isalnum(static_cast<unsigned char>(peek_())) ||
                           peek_() == '_')) {
          advance_();
        }
        std::string text(src_.substr(start, pos_ - start));
        out.push_back(token_(Tok::ident, text, line, col,
                             static_cast<int>(text.size())));
      } else {
        advance_();
        Token t = token_(Tok::bad, std::string(1, c), line, col, 1);
        t.note = "unexpected character";
        out.push_back(std::move(t));
      }
    }
  }

 private:
  bool eof_() const { return pos_ >= src_.size(); }
  char peek_() const { return src_[pos_]; }

  void advance_() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_blank_() {
    while (!eof_()) {
      char c = peek_();
      if (c == '#') {
        while (!eof_() && peek_() != '\n') advance_();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance_();
      } else {
        return;
      }
    }
  }

  Token lex_string_() {
    int line = line_, col = col_;
    size_t start = pos_;
    advance_();  // opening quote
    std::string value;
    while (!eof_() && peek_() != '"' && peek_() != '\n') {
      char c = peek_();
      advance_();
      if (c == '\\' && !eof_()) {
        char esc = peek_();
        advance_();
        switch (esc) {
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          case 'r': value += '\r'; break;
          default: value += esc; break;  // covers \" and backslash
        }
      } else {
        value += c;
      }
    }
    if (eof_() || peek_() != '"') {
      Token t = token_(Tok::bad, value, line, col,
                       static_cast<int>(pos_ - start));
      t.note = "unterminated string";
      return t;
    }
    advance_();  // closing quote
    return token_(Tok::str, value, line, col, static_cast<int>(pos_ - start));
  }

  Token make_(Tok type, std::string text, int length) {
    return token_(type, std::move(text), line_, col_, length);
  }

  Token token_(Tok type, std::string text, int line, int col, int length) {
    Token t;
    t.type = type;
    t.text = std::move(text);
    t.span = SourceSpan{file_, line, col, length};
    return t;
  }

  std::string_view src_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// ---------------------------------------------------------------------------
// Syntax trees
// ---------------------------------------------------------------------------

struct AstPath {
  std::vector<std::string> segments;  // thimac names
  StageKind kind = StageKind::create;
  SourceSpan span;

  std::string text() const {
    std::string out;
    for (const std::string& s : segments) {
      out += s;
      out += '.';
    }
    out += stage_kind_name(kind);
    return out;
  }
};

struct AstStage {
  StageKind kind = StageKind::create;
  SourceSpan span;
};

struct AstAttr {
  std::string name;
  std::string value;
  SourceSpan span;
};

struct AstThimac {
  std::string name;
  SourceSpan span;
  std::vector<AstAttr> attrs;
  std::vector<AstStage> stages;
  std::vector<AstThimac> children;
};

struct AstArc {
  ArcKind kind = ArcKind::flow;
  AstPath src;
  AstPath dst;
  std::optional<std::string> label;
  SourceSpan span;
};

struct AstEventMember {
  bool is_stage = false;
  AstPath a;
  AstPath b;  // arc destination when !is_stage
  SourceSpan span;
};

struct AstEvent {
  std::string name;
  std::optional<std::string> description;
  std::vector<AstEventMember> members;
  SourceSpan span;
};

struct AstBehaviorEdge {
  std::string from;
  std::string to;
  std::optional<std::string> label;
  SourceSpan span;
};

struct AstProgram {
  std::vector<AstThimac> thimacs;
  std::vector<AstArc> arcs;
  std::vector<AstEvent> events;
  std::vector<AstBehaviorEdge> behavior_edges;
  std::optional<SourceSpan> behavior_span;
};

bool is_keyword(const std::string& s) {
  static const std::set<std::string> kw = {"thimac", "attr",  "stage",
                                           "flow",   "trigger", "label",
                                           "event",  "behavior", "arc"};
  return kw.count(s) != 0;
}

// ---------------------------------------------------------------------------
// Parser (syntax only; resolution happens afterwards)
// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diags)
      : toks_(std::move(tokens)), diags_(diags) {}

  AstProgram run() {
    AstProgram program;
    while (!at_end_()) {
      if (peek_().type == Tok::ident && peek_().text == "thimac") {
        if (auto t = parse_thimac_()) program.thimacs.push_back(std::move(*t));
      } else if (peek_().type == Tok::ident &&
                 (peek_().text == "flow" || peek_().text == "trigger")) {
        if (auto a = parse_arc_()) program.arcs.push_back(std::move(*a));
      } else if (peek_().type == Tok::ident && peek_().text == "event") {
        if (auto e = parse_event_()) program.events.push_back(std::move(*e));
      } else if (peek_().type == Tok::ident && peek_().text == "behavior") {
        parse_behavior_(program);
      } else {
        error_(peek_().span,
               "expected 'thimac', 'flow', 'trigger', 'event' or 'behavior'");
        recover_top_();
      }
    }
    return program;
  }

 private:
  const Token& peek_() const { return toks_[pos_]; }
  const Token& advance_() { return toks_[pos_++]; }
  bool at_end_() const { return peek_().type == Tok::end; }

  bool check_ident_(const char* word) const {
    return peek_().type == Tok::ident && peek_().text == word;
  }

  void error_(const SourceSpan& span, std::string message) {
    diags_.push_back({Severity::error, "E-SYNTAX", "syntax",
                      std::move(message), span});
  }

  // Skip to the next token that can start a top-level item, honoring braces.
  void recover_top_() {
    int depth = 0;
    while (!at_end_()) {
      const Token& t = peek_();
      if (t.type == Tok::lbrace) {
        ++depth;
      } else if (t.type == Tok::rbrace) {
        if (depth > 0) --depth;
      } else if (depth == 0 && t.type == Tok::ident &&
                 (t.text == "thimac" || t.text == "flow" ||
                  t.text == "trigger" || t.text == "event" ||
                  t.text == "behavior")) {
        return;
      }
      advance_();
    }
  }

  // Skip to the next member keyword or the closing brace of the current body.
  void recover_member_(std::initializer_list<const char*> keywords) {
    int depth = 0;
    while (!at_end_()) {
      const Token& t = peek_();
      if (t.type == Tok::rbrace) {
        if (depth == 0) return;
        --depth;
      } else if (t.type == Tok::lbrace) {
        ++depth;
      } else if (depth == 0 && t.type == Tok::ident) {
        for (const char* kw : keywords) {
          if (t.text == kw) return;
        }
      }
      advance_();
    }
  }

  std::optional<Token> expect_(Tok type, const char* what) {
    if (peek_().type == type) return advance_();
    error_(peek_().span, std::string("expected ") + what);
    return std::nullopt;
  }

  std::optional<AstPath> parse_path_() {
    AstPath path;
    auto first = expect_(Tok::ident, "a stage path");
    if (!first) return std::nullopt;
    path.span = first->span;
    std::vector<std::string> raw = {first->text};
    while (peek_().type == Tok::dot) {
      advance_();
      auto seg = expect_(Tok::ident, "a path segment after '.'");
      if (!seg) return std::nullopt;
      raw.push_back(seg->text);
      path.span.length = seg->span.column + seg->span.length - path.span.column;
    }
    auto kind = stage_kind_from_name(raw.back());
    if (raw.size() < 2 || !kind) {
      error_(path.span, "a stage path must end in a stage kind");
      return std::nullopt;
    }
    raw.pop_back();
    path.segments = std::move(raw);
    path.kind = *kind;
    return path;
  }

  std::optional<AstThimac> parse_thimac_() {
    advance_();  // 'thimac'
    auto name = expect_(Tok::ident, "a thimac name");
    if (!name) {
      recover_top_();
      return std::nullopt;
    }
    AstThimac node;
    node.name = name->text;
    node.span = name->span;
    if (!expect_(Tok::lbrace, "'{' after the thimac name")) {
      recover_top_();
      return std::nullopt;
    }
    while (true) {
      if (peek_().type == Tok::rbrace) {
        advance_();
        return node;
      }
      if (at_end_()) {
        error_(peek_().span, "unterminated thimac body");
        return node;
      }
      if (check_ident_("attr")) {
        SourceSpan span = peek_().span;
        advance_();
        auto aname = expect_(Tok::ident, "an attribute name");
        if (!aname || !expect_(Tok::equals, "'=' after the attribute name")) {
          recover_member_({"attr", "stage", "thimac"});
          continue;
        }
        auto value = expect_(Tok::str, "a quoted attribute value");
        if (!value) {
          recover_member_({"attr", "stage", "thimac"});
          continue;
        }
        node.attrs.push_back({aname->text, value->text, aname->span});
      } else if (check_ident_("stage")) {
        SourceSpan span = peek_().span;
        advance_();
        if (peek_().type != Tok::ident) {
          error_(peek_().span, "expected a stage kind");
          recover_member_({"attr", "stage", "thimac"});
          continue;
        }
        auto kind = stage_kind_from_name(peek_().text);
        if (!kind) {
          error_(peek_().span, "'" + peek_().text + "' is not a stage kind");
          advance_();
          recover_member_({"attr", "stage", "thimac"});
          continue;
        }
        advance_();
        node.stages.push_back({*kind, span});
      } else if (check_ident_("thimac")) {
        if (auto child = parse_thimac_()) {
          node.children.push_back(std::move(*child));
        } else {
          recover_member_({"attr", "stage", "thimac"});
        }
      } else {
        error_(peek_().span, "expected 'attr', 'stage', 'thimac' or '}'");
        advance_();
        recover_member_({"attr", "stage", "thimac"});
      }
    }
  }

  std::optional<AstArc> parse_arc_() {
    AstArc arc;
    arc.span = peek_().span;
    arc.kind = peek_().text == "flow" ? ArcKind::flow : ArcKind::trigger;
    advance_();
    auto src = parse_path_();
    if (!src) {
      recover_top_();
      return std::nullopt;
    }
    if (!expect_(Tok::arrow, "'->' between the arc endpoints")) {
      recover_top_();
      return std::nullopt;
    }
    auto dst = parse_path_();
    if (!dst) {
      recover_top_();
      return std::nullopt;
    }
    arc.src = std::move(*src);
    arc.dst = std::move(*dst);
    if (check_ident_("label")) {
      advance_();
      auto label = expect_(Tok::str, "a quoted label");
      if (!label) {
        recover_top_();
        return std::nullopt;
      }
      arc.label = label->text;
    }
    return arc;
  }

  std::optional<AstEvent> parse_event_() {
    advance_();  // 'event'
    auto name = expect_(Tok::ident, "an event name");
    if (!name) {
      recover_top_();
      return std::nullopt;
    }
    AstEvent ev;
    ev.name = name->text;
    ev.span = name->span;
    if (peek_().type == Tok::str) ev.description = advance_().text;
    if (!expect_(Tok::lbrace, "'{' after the event name")) {
      recover_top_();
      return std::nullopt;
    }
    while (true) {
      if (peek_().type == Tok::rbrace) {
        advance_();
        return ev;
      }
      if (at_end_()) {
        error_(peek_().span, "unterminated event body");
        return ev;
      }
      if (check_ident_("stage")) {
        SourceSpan span = peek_().span;
        advance_();
        auto path = parse_path_();
        if (!path) {
          recover_member_({"stage", "arc"});
          continue;
        }
        AstEventMember m;
        m.is_stage = true;
        m.a = std::move(*path);
        m.span = span;
        ev.members.push_back(std::move(m));
      } else if (check_ident_("arc")) {
        SourceSpan span = peek_().span;
        advance_();
        auto src = parse_path_();
        if (!src || !expect_(Tok::arrow, "'->' between the arc endpoints")) {
          recover_member_({"stage", "arc"});
          continue;
        }
        auto dst = parse_path_();
        if (!dst) {
          recover_member_({"stage", "arc"});
          continue;
        }
        AstEventMember m;
        m.is_stage = false;
        m.a = std::move(*src);
        m.b = std::move(*dst);
        m.span = span;
        ev.members.push_back(std::move(m));
      } else {
        error_(peek_().span, "expected 'stage', 'arc' or '}'");
        advance_();
        recover_member_({"stage", "arc"});
      }
    }
  }

  void parse_behavior_(AstProgram& program) {
    SourceSpan kw = peek_().span;
    advance_();  // 'behavior'
    if (!program.behavior_span) program.behavior_span = kw;
    if (!expect_(Tok::lbrace, "'{' after 'behavior'")) {
      recover_top_();
      return;
    }
    while (true) {
      if (peek_().type == Tok::rbrace) {
        advance_();
        return;
      }
      if (at_end_()) {
        error_(peek_().span, "unterminated behavior body");
        return;
      }
      if (peek_().type != Tok::ident || is_keyword(peek_().text)) {
        error_(peek_().span, "expected an event name or '}'");
        advance_();
        recover_member_({});
        continue;
      }
      AstBehaviorEdge edge;
      const Token& from = advance_();
      edge.from = from.text;
      edge.span = from.span;
      if (!expect_(Tok::arrow, "'->' between event names")) {
        recover_member_({});
        continue;
      }
      if (peek_().type != Tok::ident || is_keyword(peek_().text)) {
        error_(peek_().span, "expected an event name after '->'");
        recover_member_({});
        continue;
      }
      edge.to = advance_().text;
      if (check_ident_("label")) {
        advance_();
        auto label = expect_(Tok::str, "a quoted label");
        if (!label) {
          recover_member_({});
          continue;
        }
        edge.label = label->text;
      }
      program.behavior_edges.push_back(std::move(edge));
    }
  }

  std::vector<Token> toks_;
  std::vector<Diagnostic>& diags_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Resolution: syntax trees -> model, events, behavior
// ---------------------------------------------------------------------------

class Resolver {
 public:
  Resolver(Profile profile, std::vector<Diagnostic>& diags)
      : model_(profile), diags_(diags) {}

  void run(const AstProgram& program) {
    for (const AstThimac& t : program.thimacs) add_thimac_(t, std::nullopt);
    for (const AstArc& a : program.arcs) add_arc_(a);
    for (const AstEvent& e : program.events) add_event_(e);
    resolve_behavior_(program);
  }

  StaticModel take_model() { return std::move(model_); }
  std::vector<EventDef> take_events() { return std::move(events_); }
  std::optional<BehaviorGraph> take_behavior() { return std::move(behavior_); }

 private:
  void fail_(const SourceSpan& span, std::string code, std::string subject,
             std::string message) {
    diags_.push_back({Severity::error, std::move(code), std::move(subject),
                      std::move(message), span});
  }

  static std::string code_for_(BuildErrc c) {
    switch (c) {
      case BuildErrc::invalid_name: return "E-NAME";
      case BuildErrc::duplicate_sibling_name: return "E-DUP-NAME";
      case BuildErrc::duplicate_kind: return "E-DUP-STAGE";
      case BuildErrc::kind_not_in_profile: return "E-KIND-PROFILE";
      case BuildErrc::self_arc: return "E-SELF-ARC";
      case BuildErrc::duplicate_arc: return "E-DUP-ARC";
      case BuildErrc::duplicate_event_name: return "E-DUP-EVENT";
      case BuildErrc::empty_members: return "E-EMPTY-EVENT";
      case BuildErrc::duplicate_edge: return "E-DUP-EDGE";
      default: return "E-REF";
    }
  }

  void add_thimac_(const AstThimac& node, std::optional<ThimacId> parent) {
    ThimacId id;
    try {
      std::vector<Attribute> attrs;
      for (const AstAttr& a : node.attrs) attrs.push_back({a.name, a.value});
      id = model_.add_thimac(node.name, parent, std::move(attrs));
    } catch (const BuildError& err) {
      fail_(node.span, code_for_(err.code), node.name, err.what());
      return;  // skip the whole malformed element
    }
    model_.set_span(id, node.span);
    for (const AstStage& s : node.stages) {
      try {
        StageId sid = model_.add_stage(id, s.kind);
        model_.set_span(sid, s.span);
      } catch (const BuildError& err) {
        fail_(s.span, code_for_(err.code),
              model_.thimac_path(id) + "." + stage_kind_name(s.kind),
              err.what());
      }
    }
    for (const AstThimac& child : node.children) add_thimac_(child, id);
  }

  std::optional<StageId> resolve_path_(const AstPath& path) {
    std::optional<ThimacId> owner;
    for (const std::string& seg : path.segments) {
      owner = model_.find_child(owner, seg);
      if (!owner) {
        fail_(path.span, "E-REF", path.text(),
              "no thimac named '" + seg + "' here");
        return std::nullopt;
      }
    }
    auto stage = model_.find_stage(*owner, path.kind);
    if (!stage) {
      fail_(path.span, "E-REF", path.text(),
            "'" + model_.thimac_path(*owner) + "' has no " +
                stage_kind_name(path.kind) + " stage");
      return std::nullopt;
    }
    return stage;
  }

  void add_arc_(const AstArc& node) {
    auto src = resolve_path_(node.src);
    if (!src) return;
    auto dst = resolve_path_(node.dst);
    if (!dst) return;
    try {
      ArcId id = model_.add_arc(node.kind, *src, *dst, node.label);
      model_.set_span(id, node.span);
    } catch (const BuildError& err) {
      fail_(node.span, code_for_(err.code),
            std::string(arc_kind_name(node.kind)) + " " + node.src.text() +
                "->" + node.dst.text(),
            err.what());
    }
  }

  void add_event_(const AstEvent& node) {
    std::vector<MemberRef> members;
    bool member_failed = false;
    for (const AstEventMember& m : node.members) {
      if (m.is_stage) {
        auto stage = resolve_path_(m.a);
        if (!stage) {
          member_failed = true;
          continue;
        }
        members.push_back(*stage);
      } else {
        auto src = resolve_path_(m.a);
        if (!src) {
          member_failed = true;
          continue;
        }
        auto dst = resolve_path_(m.b);
        if (!dst) {
          member_failed = true;
          continue;
        }
        // An arc member names a stage pair; if both a flow and a trigger
        // join it, the event includes both.
        bool any = false;
        for (const auto& [id, arc] : model_.arcs()) {
          if (arc.src == *src && arc.dst == *dst) {
            members.push_back(id);
            any = true;
          }
        }
        if (!any) {
          member_failed = true;
          fail_(m.span, "E-REF", m.a.text() + "->" + m.b.text(),
                "no arc joins this stage pair");
        }
      }
    }
    if (member_failed && members.empty()) return;
    try {
      const EventDef& def =
          attach_event(model_, events_, node.name, members, node.description);
      (void)def;
    } catch (const BuildError& err) {
      fail_(node.span, code_for_(err.code), node.name, err.what());
    }
  }

  void resolve_behavior_(const AstProgram& program) {
    if (!program.behavior_span) return;
    std::vector<BehaviorEdgeSpec> specs;
    std::set<std::tuple<std::string, std::string, std::optional<std::string>>>
        seen;
    for (const AstBehaviorEdge& e : program.behavior_edges) {
      bool ok = true;
      for (const std::string& name : {e.from, e.to}) {
        if (!find_event(events_, name)) {
          fail_(e.span, "E-REF", name,
                "behavior references undeclared event '" + name + "'");
          ok = false;
        }
      }
      if (!ok) continue;
      if (!seen.insert({e.from, e.to, e.label}).second) {
        fail_(e.span, "E-DUP-EDGE", e.from + "->" + e.to,
              "behavior edge already declared");
        continue;
      }
      specs.push_back({e.from, e.to, e.label});
    }
    std::vector<Diagnostic> infos;
    behavior_ = build_behavior(events_, specs, &infos);
    for (Diagnostic& d : infos) {
      d.span = *program.behavior_span;
      diags_.push_back(std::move(d));
    }
  }

  StaticModel model_;
  std::vector<EventDef> events_;
  std::optional<BehaviorGraph> behavior_;
  std::vector<Diagnostic>& diags_;
};

}  // namespace

ParseResult parse_model(std::string_view source, Profile profile,
                        std::string file) {
  ParseResult result;
  Lexer lexer(source, std::move(file));
  std::vector<Token> tokens = lexer.run();

  // Bad tokens surface once, through the parser, as plain syntax errors.
  for (Token& t : tokens) {
    if (t.type == Tok::bad) {
      result.diagnostics.push_back({Severity::error, "E-SYNTAX", "syntax",
                                    t.note + " '" + t.text + "'", t.span});
    }
  }
  std::vector<Token> clean;
  for (Token& t : tokens) {
    if (t.type != Tok::bad) clean.push_back(std::move(t));
  }

  Parser parser(std::move(clean), result.diagnostics);
  AstProgram program = parser.run();

  Resolver resolver(profile, result.diagnostics);
  resolver.run(program);

  if (!has_errors(result.diagnostics)) {
    result.model = resolver.take_model();
    result.events = resolver.take_events();
    result.behavior = resolver.take_behavior();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Formatter
// ---------------------------------------------------------------------------

std::string quote_string(std::string_view raw) {
  std::string out = "\"";
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c; break;
    }
  }
  out += '"';
  return out;
}

namespace {

void format_thimac(const StaticModel& model, ThimacId id, int depth,
                   std::string& out) {
  std::string indent(static_cast<size_t>(depth) * 2, ' ');
  const Thimac& t = model.thimac(id);
  out += indent + "thimac " + t.name + " {\n";
  std::string inner(static_cast<size_t>(depth + 1) * 2, ' ');
  for (const Attribute& a : t.attributes) {
    out += inner + "attr " + a.name + " = " + quote_string(a.value) + "\n";
  }
  std::vector<StageKind> kinds;
  for (StageId s : t.stages) kinds.push_back(model.stage(s).kind);
  std::sort(kinds.begin(), kinds.end());
  for (StageKind k : kinds) {
    out += inner + "stage " + stage_kind_name(k) + "\n";
  }
  for (ThimacId child : t.children) {
    format_thimac(model, child, depth + 1, out);
  }
  out += indent + "}\n";
}

}  // namespace

std::string format_model(const StaticModel& model,
                         const std::vector<EventDef>& events,
                         const std::optional<BehaviorGraph>& behavior) {
  std::vector<std::string> sections;

  for (ThimacId root : model.roots()) {
    std::string block;
    format_thimac(model, root, 0, block);
    sections.push_back(std::move(block));
  }

  std::vector<std::tuple<int, std::string, std::string, const ArcEdge*>> arcs;
  for (const auto& [id, a] : model.arcs()) {
    arcs.emplace_back(static_cast<int>(a.kind), model.stage_ref(a.src),
                      model.stage_ref(a.dst), &a);
  }
  std::sort(arcs.begin(), arcs.end(),
            [](const auto& l, const auto& r) {
              return std::tie(std::get<0>(l), std::get<1>(l), std::get<2>(l)) <
                     std::tie(std::get<0>(r), std::get<1>(r), std::get<2>(r));
            });
  if (!arcs.empty()) {
    std::string block;
    for (const auto& [kind, src, dst, arc] : arcs) {
      block += std::string(arc_kind_name(arc->kind)) + " " + src + " -> " + dst;
      if (arc->label) block += " label " + quote_string(*arc->label);
      block += "\n";
    }
    sections.push_back(std::move(block));
  }

  for (const EventDef& e : events) {
    std::string block = "event " + e.name;
    if (e.description) block += " " + quote_string(*e.description);
    block += " {\n";
    std::vector<std::string> stage_paths;
    for (StageId s : e.stages) stage_paths.push_back(model.stage_path(s));
    std::sort(stage_paths.begin(), stage_paths.end());
    for (const std::string& p : stage_paths) {
      block += "  stage " + p + "\n";
    }
    std::set<std::pair<std::string, std::string>> pairs;
    for (ArcId a : e.arcs) {
      const ArcEdge& arc = model.arc(a);
      pairs.insert({model.stage_ref(arc.src), model.stage_ref(arc.dst)});
    }
    for (const auto& [src, dst] : pairs) {
      block += "  arc " + src + " -> " + dst + "\n";
    }
    block += "}\n";
    sections.push_back(std::move(block));
  }

  if (behavior) {
    std::map<EventId, std::string> names;
    for (const EventDef& e : events) names[e.id] = e.name;
    std::vector<std::tuple<std::string, std::string, std::string, bool>> edges;
    for (const BehaviorEdge& e : behavior->edges) {
      edges.emplace_back(names.at(e.from), names.at(e.to),
                         e.label.value_or(""), e.label.has_value());
    }
    std::sort(edges.begin(), edges.end());
    std::string block = "behavior {\n";
    for (const auto& [from, to, label, has_label] : edges) {
      block += "  " + from + " -> " + to;
      if (has_label) block += " label " + quote_string(label);
      block += "\n";
    }
    block += "}\n";
    sections.push_back(std::move(block));
  }

  std::string out;
  for (size_t i = 0; i < sections.size(); ++i) {
    if (i > 0) out += "\n";
    out += sections[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

namespace {

bool thimacs_equal(const StaticModel& ma, ThimacId a, const StaticModel& mb,
                   ThimacId b) {
  const Thimac& ta = ma.thimac(a);
  const Thimac& tb = mb.thimac(b);
  if (ta.name != tb.name) return false;
  if (ta.attributes.size() != tb.attributes.size()) return false;
  for (size_t i = 0; i < ta.attributes.size(); ++i) {
    if (!(ta.attributes[i] == tb.attributes[i])) return false;
  }
  auto stage_set = [](const StaticModel& m, const Thimac& t) {
    std::set<std::pair<StageKind, std::string>> out;
    for (StageId s : t.stages) {
      out.insert({m.stage(s).kind, m.stage(s).note.value_or("")});
    }
    return out;
  };
  if (stage_set(ma, ta) != stage_set(mb, tb)) return false;
  if (ta.children.size() != tb.children.size()) return false;
  for (size_t i = 0; i < ta.children.size(); ++i) {
    if (!thimacs_equal(ma, ta.children[i], mb, tb.children[i])) return false;
  }
  return true;
}

using ArcKey = std::tuple<int, std::string, std::string, std::string, bool>;

std::multiset<ArcKey> arc_keys(const StaticModel& m) {
  std::multiset<ArcKey> out;
  for (const auto& [id, a] : m.arcs()) {
    out.insert({static_cast<int>(a.kind), m.stage_ref(a.src),
                m.stage_ref(a.dst), a.label.value_or(""),
                a.label.has_value()});
  }
  return out;
}

using EventKey =
    std::tuple<std::string, std::string, bool, std::set<std::string>,
               std::set<std::tuple<int, std::string, std::string>>>;

EventKey event_key(const StaticModel& m, const EventDef& e) {
  std::set<std::string> stages;
  for (StageId s : e.stages) stages.insert(m.stage_path(s));
  std::set<std::tuple<int, std::string, std::string>> arcs;
  for (ArcId a : e.arcs) {
    const ArcEdge& arc = m.arc(a);
    arcs.insert({static_cast<int>(arc.kind), m.stage_ref(arc.src),
                 m.stage_ref(arc.dst)});
  }
  return {e.name, e.description.value_or(""), e.description.has_value(),
          std::move(stages), std::move(arcs)};
}

std::set<std::tuple<std::string, std::string, std::string, bool>> edge_keys(
    const std::vector<EventDef>& events, const BehaviorGraph& g) {
  std::map<EventId, std::string> names;
  for (const EventDef& e : events) names[e.id] = e.name;
  std::set<std::tuple<std::string, std::string, std::string, bool>> out;
  for (const BehaviorEdge& e : g.edges) {
    out.insert({names.at(e.from), names.at(e.to), e.label.value_or(""),
                e.label.has_value()});
  }
  return out;
}

}  // namespace

bool documents_equal(const StaticModel& a, const std::vector<EventDef>& ea,
                     const std::optional<BehaviorGraph>& ba,
                     const StaticModel& b, const std::vector<EventDef>& eb,
                     const std::optional<BehaviorGraph>& bb) {
  if (a.profile() != b.profile()) return false;
  if (a.roots().size() != b.roots().size()) return false;
  for (size_t i = 0; i < a.roots().size(); ++i) {
    if (!thimacs_equal(a, a.roots()[i], b, b.roots()[i])) return false;
  }
  if (arc_keys(a) != arc_keys(b)) return false;
  if (ea.size() != eb.size()) return false;
  for (size_t i = 0; i < ea.size(); ++i) {
    if (event_key(a, ea[i]) != event_key(b, eb[i])) return false;
  }
  if (ba.has_value() != bb.has_value()) return false;
  if (ba && edge_keys(ea, *ba) != edge_keys(eb, *bb)) return false;
  return true;
}

}  // namespace tmk
