// SPDX-License-Identifier: Apache-2.0
//
// pebble: a small, strictly-typed scripting language used as the fixture
// toolchain for the sandbox and benchmark tests.
//
//   pebble <file>          parse, then run
//   pebble --check <file>  parse only
//
// Exit codes: 0 ok, 1 assertion failure, 65 parse error, 70 runtime error,
// 66 unreadable input. exit(n) terminates with n.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>
#include <algorithm>

namespace pebble {

constexpr int kExitAssert = 1;
constexpr int kExitParse = 65;
constexpr int kExitNoInput = 66;
constexpr int kExitRuntime = 70;

struct ParseError
{
    int line;
    int col;
    std::string message;
};

struct RuntimeError
{
    int line;
    std::string message;
};

struct AssertFailure
{
    int line;
    std::string message;
};

struct ExitRequest
{
    int code;
};

// ---------------------------------------------------------------- lexer

enum class Tok
{
    Int, Str, Ident, Keyword, Op, End
};

struct Token
{
    Tok kind;
    std::string text;
    std::int64_t value = 0;
    int line = 1;
    int col = 1;
};

const char* const kKeywords[] = {"let", "fn", "return", "if", "else", "while", "for", "in",
                                 "break", "continue", "true", "false", "nil"};

bool is_keyword(std::string_view s)
{
    return std::any_of(std::begin(kKeywords), std::end(kKeywords), [&](const char* k) { return s == k; });
}

std::vector<Token> lex(const std::string& src)
{
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1;
    int col = 1;
    auto advance = [&](std::size_t n = 1) {
        for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i)
        {
            if (src[i] == '\n')
            {
                ++line;
                col = 1;
            }
            else
                ++col;
        }
    };
    while (i < src.size())
    {
        char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
        {
            advance();
            continue;
        }
        if (c == '/' && i + 1 < src.size() && src[i + 1] == '/')
        {
            while (i < src.size() && src[i] != '\n')
                advance();
            continue;
        }
        Token t{Tok::End, "", 0, line, col};
        if (std::isdigit(static_cast<unsigned char>(c)))
        {
            std::size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
                ++j;
            t.kind = Tok::Int;
            t.text = src.substr(i, j - i);
            std::uint64_t v = 0;
            for (char d : t.text)
            {
                std::uint64_t next = v * 10 + static_cast<std::uint64_t>(d - '0');
                if (next / 10 != v || next > static_cast<std::uint64_t>(INT64_MAX))
                    throw ParseError{line, col, "integer literal too large"};
                v = next;
            }
            t.value = static_cast<std::int64_t>(v);
            advance(j - i);
        }
        else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
        {
            std::size_t j = i;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.text = src.substr(i, j - i);
            t.kind = is_keyword(t.text) ? Tok::Keyword : Tok::Ident;
            advance(j - i);
        }
        else if (c == '"')
        {
            advance();
            std::string s;
            while (true)
            {
                if (i >= src.size() || src[i] == '\n')
                    throw ParseError{t.line, t.col, "unterminated string literal"};
                char d = src[i];
                if (d == '"')
                {
                    advance();
                    break;
                }
                if (d == '\\')
                {
                    if (i + 1 >= src.size())
                        throw ParseError{line, col, "unterminated string literal"};
                    char e = src[i + 1];
                    switch (e)
                    {
                    case 'n': s += '\n'; break;
                    case 't': s += '\t'; break;
                    case '"': s += '"'; break;
                    case '\\': s += '\\'; break;
                    default: throw ParseError{line, col, std::string("unknown escape \\") + e};
                    }
                    advance(2);
                    continue;
                }
                s += d;
                advance();
            }
            t.kind = Tok::Str;
            t.text = std::move(s);
        }
        else
        {
            static const char* const two[] = {"==", "!=", "<=", ">=", "&&", "||", ".."};
            t.kind = Tok::Op;
            bool matched = false;
            for (const char* op : two)
            {
                if (src.compare(i, 2, op) == 0)
                {
                    t.text = op;
                    advance(2);
                    matched = true;
                    break;
                }
            }
            if (!matched)
            {
                if (std::string_view("+-*/%<>=!(){}[],;.:").find(c) == std::string_view::npos)
                    throw ParseError{line, col, std::string("unexpected character '") + c + "'"};
                t.text = std::string(1, c);
                advance();
            }
        }
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "<end of input>", 0, line, col});
    return out;
}

// ---------------------------------------------------------------- AST

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Expr
{
    enum class Kind
    {
        Int, Str, Bool, Nil, Var, Array, Unary, Binary, Range, Call, Index, Method
    } kind;
    int line = 0;
    std::int64_t int_value = 0;
    std::string text;  // literal, variable, operator, or method name
    std::vector<ExprPtr> args;  // operands / call args / array items; for Method args[0] is the receiver
};

struct Stmt
{
    enum class Kind
    {
        Let, Assign, Expr, If, While, For, Return, Break, Continue
    } kind;
    int line = 0;
    std::string name;
    ExprPtr target;
    ExprPtr value;
    Block body;
    Block else_body;
};

struct Function
{
    std::string name;
    std::vector<std::string> params;
    Block body;
    int line = 0;
};

struct Program
{
    std::vector<std::unique_ptr<Function>> functions;
    Block main;
};

// ---------------------------------------------------------------- parser

class Parser
{
public:
    explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

    Program parse_program()
    {
        Program prog;
        while (!at_end())
        {
            if (is_kw("fn"))
                prog.functions.push_back(parse_function());
            else
                prog.main.push_back(parse_statement());
        }
        return prog;
    }

private:
    std::vector<Token> toks_;
    std::size_t pos_ = 0;

    const Token& peek(std::size_t ahead = 0) const
    {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }
    bool at_end() const { return peek().kind == Tok::End; }
    bool is_op(std::string_view op) const { return peek().kind == Tok::Op && peek().text == op; }
    bool is_kw(std::string_view kw) const { return peek().kind == Tok::Keyword && peek().text == kw; }

    [[noreturn]] void fail(const std::string& what) const
    {
        const Token& t = peek();
        throw ParseError{t.line, t.col, what + ", found '" + t.text + "'"};
    }

    void expect_op(std::string_view op)
    {
        if (!is_op(op))
            fail("expected '" + std::string(op) + "'");
        ++pos_;
    }

    std::string expect_ident(const char* what)
    {
        if (peek().kind != Tok::Ident)
            fail(std::string("expected ") + what);
        return toks_[pos_++].text;
    }

    std::unique_ptr<Function> parse_function()
    {
        auto fn = std::make_unique<Function>();
        fn->line = peek().line;
        ++pos_;  // fn
        fn->name = expect_ident("function name");
        expect_op("(");
        if (!is_op(")"))
        {
            do
            {
                fn->params.push_back(expect_ident("parameter name"));
            } while (is_op(",") && (++pos_, true));
        }
        expect_op(")");
        fn->body = parse_block();
        return fn;
    }

    Block parse_block()
    {
        expect_op("{");
        Block b;
        while (!is_op("}"))
        {
            if (at_end())
                fail("expected '}'");
            if (is_kw("fn"))
                fail("functions must be declared at top level");
            b.push_back(parse_statement());
        }
        ++pos_;
        return b;
    }

    StmtPtr make_stmt(Stmt::Kind k)
    {
        auto s = std::make_unique<Stmt>();
        s->kind = k;
        s->line = peek().line;
        return s;
    }

    StmtPtr parse_statement()
    {
        if (is_kw("let"))
        {
            auto s = make_stmt(Stmt::Kind::Let);
            ++pos_;
            s->name = expect_ident("variable name");
            expect_op("=");
            s->value = parse_expr();
            expect_op(";");
            return s;
        }
        if (is_kw("if"))
            return parse_if();
        if (is_kw("while"))
        {
            auto s = make_stmt(Stmt::Kind::While);
            ++pos_;
            s->value = parse_expr();
            s->body = parse_block();
            return s;
        }
        if (is_kw("for"))
        {
            auto s = make_stmt(Stmt::Kind::For);
            ++pos_;
            s->name = expect_ident("loop variable");
            if (!is_kw("in"))
                fail("expected 'in'");
            ++pos_;
            s->value = parse_expr();
            s->body = parse_block();
            return s;
        }
        if (is_kw("return"))
        {
            auto s = make_stmt(Stmt::Kind::Return);
            ++pos_;
            if (!is_op(";"))
                s->value = parse_expr();
            expect_op(";");
            return s;
        }
        if (is_kw("break") || is_kw("continue"))
        {
            auto s = make_stmt(is_kw("break") ? Stmt::Kind::Break : Stmt::Kind::Continue);
            ++pos_;
            expect_op(";");
            return s;
        }
        auto line = peek().line;
        auto e = parse_expr();
        if (is_op("="))
        {
            if (e->kind != Expr::Kind::Var && e->kind != Expr::Kind::Index)
                fail("invalid assignment target");
            ++pos_;
            auto s = make_stmt(Stmt::Kind::Assign);
            s->line = line;
            s->target = std::move(e);
            s->value = parse_expr();
            expect_op(";");
            return s;
        }
        auto s = make_stmt(Stmt::Kind::Expr);
        s->line = line;
        s->value = std::move(e);
        expect_op(";");
        return s;
    }

    StmtPtr parse_if()
    {
        auto s = make_stmt(Stmt::Kind::If);
        ++pos_;
        s->value = parse_expr();
        s->body = parse_block();
        if (is_kw("else"))
        {
            ++pos_;
            if (is_kw("if"))
                s->else_body.push_back(parse_if());
            else
                s->else_body = parse_block();
        }
        return s;
    }

    ExprPtr make_expr(Expr::Kind k, int line)
    {
        auto e = std::make_unique<Expr>();
        e->kind = k;
        e->line = line;
        return e;
    }

    ExprPtr binary(std::string op, ExprPtr l, ExprPtr r, int line)
    {
        auto e = make_expr(Expr::Kind::Binary, line);
        e->text = std::move(op);
        e->args.push_back(std::move(l));
        e->args.push_back(std::move(r));
        return e;
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or()
    {
        auto l = parse_and();
        while (is_op("||"))
        {
            int line = peek().line;
            ++pos_;
            l = binary("||", std::move(l), parse_and(), line);
        }
        return l;
    }

    ExprPtr parse_and()
    {
        auto l = parse_equality();
        while (is_op("&&"))
        {
            int line = peek().line;
            ++pos_;
            l = binary("&&", std::move(l), parse_equality(), line);
        }
        return l;
    }

    ExprPtr parse_equality()
    {
        auto l = parse_comparison();
        while (is_op("==") || is_op("!="))
        {
            int line = peek().line;
            std::string op = toks_[pos_++].text;
            l = binary(op, std::move(l), parse_comparison(), line);
        }
        return l;
    }

    ExprPtr parse_comparison()
    {
        auto l = parse_range();
        while (is_op("<") || is_op("<=") || is_op(">") || is_op(">="))
        {
            int line = peek().line;
            std::string op = toks_[pos_++].text;
            l = binary(op, std::move(l), parse_range(), line);
        }
        return l;
    }

    ExprPtr parse_range()
    {
        auto l = parse_additive();
        if (is_op(".."))
        {
            int line = peek().line;
            ++pos_;
            auto e = make_expr(Expr::Kind::Range, line);
            e->args.push_back(std::move(l));
            e->args.push_back(parse_additive());
            return e;
        }
        return l;
    }

    ExprPtr parse_additive()
    {
        auto l = parse_multiplicative();
        while (is_op("+") || is_op("-"))
        {
            int line = peek().line;
            std::string op = toks_[pos_++].text;
            l = binary(op, std::move(l), parse_multiplicative(), line);
        }
        return l;
    }

    ExprPtr parse_multiplicative()
    {
        auto l = parse_unary();
        while (is_op("*") || is_op("/") || is_op("%"))
        {
            int line = peek().line;
            std::string op = toks_[pos_++].text;
            l = binary(op, std::move(l), parse_unary(), line);
        }
        return l;
    }

    ExprPtr parse_unary()
    {
        if (is_op("-") || is_op("!"))
        {
            int line = peek().line;
            auto e = make_expr(Expr::Kind::Unary, line);
            e->text = toks_[pos_++].text;
            e->args.push_back(parse_unary());
            return e;
        }
        return parse_postfix();
    }

    std::vector<ExprPtr> parse_args(std::string_view close)
    {
        std::vector<ExprPtr> args;
        if (!is_op(close))
        {
            args.push_back(parse_expr());
            while (is_op(","))
            {
                ++pos_;
                args.push_back(parse_expr());
            }
        }
        expect_op(close);
        return args;
    }

    ExprPtr parse_postfix()
    {
        auto e = parse_primary();
        while (true)
        {
            int line = peek().line;
            if (is_op("("))
            {
                if (e->kind != Expr::Kind::Var)
                    fail("only named functions can be called");
                ++pos_;
                auto call = make_expr(Expr::Kind::Call, e->line);
                call->text = e->text;
                call->args = parse_args(")");
                e = std::move(call);
            }
            else if (is_op("["))
            {
                ++pos_;
                auto idx = make_expr(Expr::Kind::Index, line);
                idx->args.push_back(std::move(e));
                idx->args.push_back(parse_expr());
                expect_op("]");
                e = std::move(idx);
            }
            else if (is_op("."))
            {
                ++pos_;
                auto m = make_expr(Expr::Kind::Method, line);
                m->text = expect_ident("method name");
                expect_op("(");
                m->args.push_back(std::move(e));
                for (auto& a : parse_args(")"))
                    m->args.push_back(std::move(a));
                e = std::move(m);
            }
            else
                return e;
        }
    }

    ExprPtr parse_primary()
    {
        const Token& t = peek();
        int line = t.line;
        switch (t.kind)
        {
        case Tok::Int:
        {
            auto e = make_expr(Expr::Kind::Int, line);
            e->int_value = t.value;
            ++pos_;
            return e;
        }
        case Tok::Str:
        {
            auto e = make_expr(Expr::Kind::Str, line);
            e->text = t.text;
            ++pos_;
            return e;
        }
        case Tok::Ident:
        {
            auto e = make_expr(Expr::Kind::Var, line);
            e->text = t.text;
            ++pos_;
            return e;
        }
        case Tok::Keyword:
            if (t.text == "true" || t.text == "false")
            {
                auto e = make_expr(Expr::Kind::Bool, line);
                e->int_value = t.text == "true";
                ++pos_;
                return e;
            }
            if (t.text == "nil")
            {
                ++pos_;
                return make_expr(Expr::Kind::Nil, line);
            }
            fail("expected expression");
        case Tok::Op:
            if (t.text == "(")
            {
                ++pos_;
                auto e = parse_expr();
                expect_op(")");
                return e;
            }
            if (t.text == "[")
            {
                ++pos_;
                auto e = make_expr(Expr::Kind::Array, line);
                e->args = parse_args("]");
                return e;
            }
            fail("expected expression");
        case Tok::End:
            fail("unexpected end of input");
        }
        fail("expected expression");
    }
};

// ---------------------------------------------------------------- values

struct Value;
using Array = std::vector<Value>;
using MapKey = std::variant<std::int64_t, std::string>;
using Map = std::map<MapKey, Value>;

struct Value
{
    std::variant<std::monostate, bool, std::int64_t, std::string, std::shared_ptr<Array>, std::shared_ptr<Map>> v;

    Value() = default;
    Value(bool b) : v(b) {}
    Value(std::int64_t i) : v(i) {}
    Value(std::string s) : v(std::move(s)) {}
    Value(std::shared_ptr<Array> a) : v(std::move(a)) {}
    Value(std::shared_ptr<Map> m) : v(std::move(m)) {}

    bool is_nil() const { return v.index() == 0; }
    bool is_bool() const { return v.index() == 1; }
    bool is_int() const { return v.index() == 2; }
    bool is_str() const { return v.index() == 3; }
    bool is_array() const { return v.index() == 4; }
    bool is_map() const { return v.index() == 5; }
};

const char* type_name(const Value& v)
{
    static const char* const names[] = {"Nil", "Bool", "Int", "Str", "Array", "Map"};
    return names[v.v.index()];
}

std::string display(const Value& v, bool quote_strings = false);

std::string key_display(const MapKey& k)
{
    if (auto* i = std::get_if<std::int64_t>(&k))
        return std::to_string(*i);
    return "\"" + std::get<std::string>(k) + "\"";
}

std::string display(const Value& v, bool quote_strings)
{
    switch (v.v.index())
    {
    case 0: return "nil";
    case 1: return std::get<bool>(v.v) ? "true" : "false";
    case 2: return std::to_string(std::get<std::int64_t>(v.v));
    case 3: return quote_strings ? "\"" + std::get<std::string>(v.v) + "\"" : std::get<std::string>(v.v);
    case 4:
    {
        std::string out = "[";
        const auto& arr = *std::get<std::shared_ptr<Array>>(v.v);
        for (std::size_t i = 0; i < arr.size(); ++i)
            out += (i ? ", " : "") + display(arr[i], true);
        return out + "]";
    }
    default:
    {
        std::string out = "{";
        bool first = true;
        for (const auto& [k, val] : *std::get<std::shared_ptr<Map>>(v.v))
        {
            out += (first ? "" : ", ") + key_display(k) + ": " + display(val, true);
            first = false;
        }
        return out + "}";
    }
    }
}

bool equal(const Value& a, const Value& b)
{
    if (a.v.index() != b.v.index())
        return false;
    switch (a.v.index())
    {
    case 0: return true;
    case 1: return std::get<bool>(a.v) == std::get<bool>(b.v);
    case 2: return std::get<std::int64_t>(a.v) == std::get<std::int64_t>(b.v);
    case 3: return std::get<std::string>(a.v) == std::get<std::string>(b.v);
    case 4:
    {
        const auto& x = *std::get<std::shared_ptr<Array>>(a.v);
        const auto& y = *std::get<std::shared_ptr<Array>>(b.v);
        if (x.size() != y.size())
            return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (!equal(x[i], y[i]))
                return false;
        return true;
    }
    default:
    {
        const auto& x = *std::get<std::shared_ptr<Map>>(a.v);
        const auto& y = *std::get<std::shared_ptr<Map>>(b.v);
        if (x.size() != y.size())
            return false;
        for (auto i = x.begin(), j = y.begin(); i != x.end(); ++i, ++j)
            if (i->first != j->first || !equal(i->second, j->second))
                return false;
        return true;
    }
    }
}

Value make_array(Array items = {})
{
    return Value(std::make_shared<Array>(std::move(items)));
}

// ---------------------------------------------------------------- interpreter

struct BreakSignal {};
struct ContinueSignal {};
struct ReturnSignal
{
    Value value;
};

class Interpreter
{
public:
    explicit Interpreter(const Program& prog) : prog_(prog)
    {
        for (const auto& fn : prog.functions)
        {
            if (functions_.count(fn->name) || is_builtin(fn->name))
                throw RuntimeError{fn->line, "duplicate function '" + fn->name + "'"};
            functions_[fn->name] = fn.get();
        }
    }

    void run()
    {
        frames_.push_back({});  // globals
        exec_block(prog_.main, false);
    }

private:
    using Scope = std::unordered_map<std::string, Value>;
    struct Frame
    {
        std::vector<Scope> scopes;
    };

    const Program& prog_;
    std::unordered_map<std::string, const Function*> functions_;
    std::vector<Frame> frames_;
    int depth_ = 0;

    static bool is_builtin(const std::string& name)
    {
        static const char* const names[] = {"print", "read_line", "assert", "exit", "map", "str", "min", "max", "abs"};
        return std::any_of(std::begin(names), std::end(names), [&](const char* n) { return name == n; });
    }

    [[noreturn]] static void fail(int line, const std::string& msg) { throw RuntimeError{line, msg}; }

    Value* lookup(const std::string& name)
    {
        auto& frame = frames_.back();
        for (auto it = frame.scopes.rbegin(); it != frame.scopes.rend(); ++it)
        {
            auto f = it->find(name);
            if (f != it->end())
                return &f->second;
        }
        if (frames_.size() > 1 && !frames_.front().scopes.empty())
        {
            auto& globals = frames_.front().scopes.front();
            auto f = globals.find(name);
            if (f != globals.end())
                return &f->second;
        }
        return nullptr;
    }

    void exec_block(const Block& block, bool new_scope = true)
    {
        auto& frame = frames_.back();
        if (new_scope || frame.scopes.empty())
            frame.scopes.emplace_back();
        struct Pop
        {
            Interpreter* self;
            bool active;
            ~Pop()
            {
                if (active)
                    self->frames_.back().scopes.pop_back();
            }
        } pop{this, new_scope};
        for (const auto& s : block)
            exec(*s);
    }

    static bool condition(const Value& v, int line)
    {
        if (!v.is_bool())
            fail(line, std::string("condition must be Bool, got ") + type_name(v));
        return std::get<bool>(v.v);
    }

    void exec(const Stmt& s)
    {
        switch (s.kind)
        {
        case Stmt::Kind::Let:
        {
            auto& scope = frames_.back().scopes.back();
            if (scope.count(s.name))
                fail(s.line, "variable '" + s.name + "' already declared in this scope");
            scope[s.name] = eval(*s.value);
            return;
        }
        case Stmt::Kind::Assign:
            assign(*s.target, eval(*s.value), s.line);
            return;
        case Stmt::Kind::Expr:
            eval(*s.value);
            return;
        case Stmt::Kind::If:
            if (condition(eval(*s.value), s.line))
                exec_block(s.body);
            else if (!s.else_body.empty())
                exec_block(s.else_body);
            return;
        case Stmt::Kind::While:
            while (condition(eval(*s.value), s.line))
            {
                try
                {
                    exec_block(s.body);
                }
                catch (const BreakSignal&)
                {
                    break;
                }
                catch (const ContinueSignal&)
                {
                }
            }
            return;
        case Stmt::Kind::For:
            exec_for(s);
            return;
        case Stmt::Kind::Return:
            if (frames_.size() < 2)
                fail(s.line, "'return' outside of a function");
            throw ReturnSignal{s.value ? eval(*s.value) : Value()};
        case Stmt::Kind::Break:
            throw BreakSignal{};
        case Stmt::Kind::Continue:
            throw ContinueSignal{};
        }
    }

    void exec_for(const Stmt& s)
    {
        auto body = [&](Value item) -> bool {
            auto& frame = frames_.back();
            frame.scopes.emplace_back();
            frame.scopes.back()[s.name] = std::move(item);
            bool keep_going = true;
            try
            {
                exec_block(s.body, false);
            }
            catch (const BreakSignal&)
            {
                keep_going = false;
            }
            catch (const ContinueSignal&)
            {
            }
            catch (...)
            {
                frames_.back().scopes.pop_back();
                throw;
            }
            frames_.back().scopes.pop_back();
            return keep_going;
        };
        const Expr& iter = *s.value;
        if (iter.kind == Expr::Kind::Range)
        {
            auto lo = expect_int(eval(*iter.args[0]), iter.line, "range start");
            auto hi = expect_int(eval(*iter.args[1]), iter.line, "range end");
            for (auto i = lo; i < hi; ++i)
                if (!body(Value(i)))
                    break;
            return;
        }
        Value v = eval(iter);
        if (v.is_array())
        {
            auto arr = std::get<std::shared_ptr<Array>>(v.v);
            Array snapshot = *arr;
            for (auto& item : snapshot)
                if (!body(item))
                    break;
            return;
        }
        if (v.is_str())
        {
            for (char c : std::get<std::string>(v.v))
                if (!body(Value(std::string(1, c))))
                    break;
            return;
        }
        fail(s.line, std::string("cannot iterate over ") + type_name(v));
    }

    void assign(const Expr& target, Value v, int line)
    {
        if (target.kind == Expr::Kind::Var)
        {
            Value* slot = lookup(target.text);
            if (!slot)
                fail(line, "undeclared identifier '" + target.text + "'");
            *slot = std::move(v);
            return;
        }
        Value container = eval(*target.args[0]);
        Value key = eval(*target.args[1]);
        if (container.is_array())
        {
            auto& arr = *std::get<std::shared_ptr<Array>>(container.v);
            arr[checked_index(key, arr.size(), line)] = std::move(v);
            return;
        }
        if (container.is_map())
        {
            (*std::get<std::shared_ptr<Map>>(container.v))[to_key(key, line)] = std::move(v);
            return;
        }
        fail(line, std::string("cannot assign into ") + type_name(container));
    }

    static std::int64_t expect_int(const Value& v, int line, const char* what)
    {
        if (!v.is_int())
            fail(line, std::string(what) + " must be Int, got " + type_name(v));
        return std::get<std::int64_t>(v.v);
    }

    static const std::string& expect_str(const Value& v, int line, const char* what)
    {
        if (!v.is_str())
            fail(line, std::string(what) + " must be Str, got " + type_name(v));
        return std::get<std::string>(v.v);
    }

    static std::size_t checked_index(const Value& idx, std::size_t size, int line)
    {
        auto i = expect_int(idx, line, "index");
        if (i < 0 || static_cast<std::size_t>(i) >= size)
            fail(line, "index " + std::to_string(i) + " out of range for length " + std::to_string(size));
        return static_cast<std::size_t>(i);
    }

    static MapKey to_key(const Value& v, int line)
    {
        if (v.is_int())
            return std::get<std::int64_t>(v.v);
        if (v.is_str())
            return std::get<std::string>(v.v);
        fail(line, std::string("map keys must be Int or Str, got ") + type_name(v));
    }

    static Value from_key(const MapKey& k)
    {
        if (auto* i = std::get_if<std::int64_t>(&k))
            return Value(*i);
        return Value(std::get<std::string>(k));
    }

    static std::int64_t wrap(std::uint64_t x) { return static_cast<std::int64_t>(x); }

    Value eval(const Expr& e)
    {
        switch (e.kind)
        {
        case Expr::Kind::Int: return Value(e.int_value);
        case Expr::Kind::Str: return Value(e.text);
        case Expr::Kind::Bool: return Value(e.int_value != 0);
        case Expr::Kind::Nil: return Value();
        case Expr::Kind::Var:
        {
            Value* v = lookup(e.text);
            if (!v)
                fail(e.line, "undeclared identifier '" + e.text + "'");
            return *v;
        }
        case Expr::Kind::Array:
        {
            Array items;
            for (const auto& a : e.args)
                items.push_back(eval(*a));
            return make_array(std::move(items));
        }
        case Expr::Kind::Unary:
        {
            Value v = eval(*e.args[0]);
            if (e.text == "-")
                return Value(wrap(0 - static_cast<std::uint64_t>(expect_int(v, e.line, "operand of '-'"))));
            return Value(!condition(v, e.line));
        }
        case Expr::Kind::Binary: return eval_binary(e);
        case Expr::Kind::Range:
        {
            auto lo = expect_int(eval(*e.args[0]), e.line, "range start");
            auto hi = expect_int(eval(*e.args[1]), e.line, "range end");
            Array items;
            for (auto i = lo; i < hi; ++i)
                items.emplace_back(i);
            return make_array(std::move(items));
        }
        case Expr::Kind::Call: return call(e);
        case Expr::Kind::Index:
        {
            Value c = eval(*e.args[0]);
            Value k = eval(*e.args[1]);
            if (c.is_array())
            {
                const auto& arr = *std::get<std::shared_ptr<Array>>(c.v);
                return arr[checked_index(k, arr.size(), e.line)];
            }
            if (c.is_str())
            {
                const auto& s = std::get<std::string>(c.v);
                return Value(std::string(1, s[checked_index(k, s.size(), e.line)]));
            }
            if (c.is_map())
            {
                const auto& m = *std::get<std::shared_ptr<Map>>(c.v);
                auto it = m.find(to_key(k, e.line));
                if (it == m.end())
                    fail(e.line, "key " + display(k, true) + " not found");
                return it->second;
            }
            fail(e.line, std::string("cannot index into ") + type_name(c));
        }
        case Expr::Kind::Method: return method(e);
        }
        fail(e.line, "bad expression");
    }

    Value eval_binary(const Expr& e)
    {
        const std::string& op = e.text;
        if (op == "&&" || op == "||")
        {
            bool l = condition(eval(*e.args[0]), e.line);
            if (op == "&&" && !l)
                return Value(false);
            if (op == "||" && l)
                return Value(true);
            return Value(condition(eval(*e.args[1]), e.line));
        }
        Value a = eval(*e.args[0]);
        Value b = eval(*e.args[1]);
        if (op == "==")
            return Value(equal(a, b));
        if (op == "!=")
            return Value(!equal(a, b));
        if (op == "<" || op == "<=" || op == ">" || op == ">=")
        {
            int cmp = 0;
            if (a.is_int() && b.is_int())
            {
                auto x = std::get<std::int64_t>(a.v), y = std::get<std::int64_t>(b.v);
                cmp = x < y ? -1 : (x > y ? 1 : 0);
            }
            else if (a.is_str() && b.is_str())
                cmp = std::get<std::string>(a.v).compare(std::get<std::string>(b.v));
            else
                fail(e.line, std::string("cannot compare ") + type_name(a) + " and " + type_name(b));
            if (op == "<") return Value(cmp < 0);
            if (op == "<=") return Value(cmp <= 0);
            if (op == ">") return Value(cmp > 0);
            return Value(cmp >= 0);
        }
        if (op == "+" && a.is_str() && b.is_str())
            return Value(std::get<std::string>(a.v) + std::get<std::string>(b.v));
        if (op == "+" && a.is_array() && b.is_array())
        {
            Array out = *std::get<std::shared_ptr<Array>>(a.v);
            const auto& rhs = *std::get<std::shared_ptr<Array>>(b.v);
            out.insert(out.end(), rhs.begin(), rhs.end());
            return make_array(std::move(out));
        }
        if (!a.is_int() || !b.is_int())
            fail(e.line, "cannot apply '" + op + "' to " + type_name(a) + " and " + type_name(b));
        auto x = std::get<std::int64_t>(a.v);
        auto y = std::get<std::int64_t>(b.v);
        auto ux = static_cast<std::uint64_t>(x), uy = static_cast<std::uint64_t>(y);
        if (op == "+") return Value(wrap(ux + uy));
        if (op == "-") return Value(wrap(ux - uy));
        if (op == "*") return Value(wrap(ux * uy));
        if (y == 0)
            fail(e.line, "division by zero");
        if (x == INT64_MIN && y == -1)
            return Value(op == "/" ? x : std::int64_t{0});
        if (op == "/") return Value(x / y);
        return Value(x % y);
    }

    void arity(const Expr& e, std::size_t n, const std::string& name, std::size_t offset = 0)
    {
        if (e.args.size() - offset != n)
            fail(e.line, name + " expects " + std::to_string(n) + " argument(s), got " +
                             std::to_string(e.args.size() - offset));
    }

    Value call(const Expr& e)
    {
        const std::string& name = e.text;
        auto fit = functions_.find(name);
        if (fit != functions_.end())
        {
            const Function& fn = *fit->second;
            arity(e, fn.params.size(), "function '" + name + "'");
            Scope params;
            for (std::size_t i = 0; i < fn.params.size(); ++i)
                params[fn.params[i]] = eval(*e.args[i]);
            if (++depth_ > 2000)
                fail(e.line, "stack overflow");
            frames_.push_back(Frame{{std::move(params)}});
            Value result;
            try
            {
                exec_block(fn.body);
            }
            catch (ReturnSignal& r)
            {
                result = std::move(r.value);
            }
            catch (const BreakSignal&)
            {
                frames_.pop_back();
                --depth_;
                fail(e.line, "'break' outside of a loop");
            }
            catch (...)
            {
                frames_.pop_back();
                --depth_;
                throw;
            }
            frames_.pop_back();
            --depth_;
            return result;
        }
        std::vector<Value> args;
        for (const auto& a : e.args)
            args.push_back(eval(*a));
        if (name == "print")
        {
            arity(e, 1, "print");
            std::cout << display(args[0]) << '\n';
            return Value();
        }
        if (name == "read_line")
        {
            arity(e, 0, "read_line");
            std::string line;
            if (!std::getline(std::cin, line))
                return Value();
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            return Value(line);
        }
        if (name == "assert")
        {
            if (args.empty() || args.size() > 2)
                fail(e.line, "assert expects 1 or 2 arguments");
            if (!condition(args[0], e.line))
                throw AssertFailure{e.line, args.size() == 2 ? display(args[1]) : "assertion failed"};
            return Value();
        }
        if (name == "exit")
        {
            arity(e, 1, "exit");
            throw ExitRequest{static_cast<int>(expect_int(args[0], e.line, "exit code"))};
        }
        if (name == "map")
        {
            arity(e, 0, "map");
            return Value(std::make_shared<Map>());
        }
        if (name == "str")
        {
            arity(e, 1, "str");
            return Value(display(args[0]));
        }
        if (name == "min" || name == "max")
        {
            arity(e, 2, name);
            auto x = expect_int(args[0], e.line, "argument"), y = expect_int(args[1], e.line, "argument");
            return Value(name == "min" ? std::min(x, y) : std::max(x, y));
        }
        if (name == "abs")
        {
            arity(e, 1, "abs");
            auto x = expect_int(args[0], e.line, "argument");
            return Value(x < 0 ? wrap(0 - static_cast<std::uint64_t>(x)) : x);
        }
        fail(e.line, "undeclared function '" + name + "'");
    }

    Value method(const Expr& e)
    {
        Value recv = eval(*e.args[0]);
        std::vector<Value> args;
        for (std::size_t i = 1; i < e.args.size(); ++i)
            args.push_back(eval(*e.args[i]));
        const std::string& m = e.text;
        auto need = [&](std::size_t n) { arity(e, n, std::string(type_name(recv)) + "." + m, 1); };

        if (recv.is_str())
        {
            const std::string& s = std::get<std::string>(recv.v);
            if (m == "len") { need(0); return Value(static_cast<std::int64_t>(s.size())); }
            if (m == "chars")
            {
                need(0);
                Array out;
                for (char c : s)
                    out.emplace_back(std::string(1, c));
                return make_array(std::move(out));
            }
            if (m == "split")
            {
                need(1);
                const auto& sep = expect_str(args[0], e.line, "separator");
                if (sep.empty())
                    fail(e.line, "separator must not be empty");
                Array out;
                std::size_t start = 0;
                while (true)
                {
                    auto pos = s.find(sep, start);
                    out.emplace_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
                    if (pos == std::string::npos)
                        break;
                    start = pos + sep.size();
                }
                return make_array(std::move(out));
            }
            if (m == "trim")
            {
                need(0);
                auto b = s.find_first_not_of(" \t\r\n");
                if (b == std::string::npos)
                    return Value(std::string());
                auto en = s.find_last_not_of(" \t\r\n");
                return Value(s.substr(b, en - b + 1));
            }
            if (m == "upper" || m == "lower")
            {
                need(0);
                std::string out = s;
                for (char& c : out)
                    c = static_cast<char>(m == "upper" ? std::toupper(static_cast<unsigned char>(c))
                                                       : std::tolower(static_cast<unsigned char>(c)));
                return Value(out);
            }
            if (m == "contains") { need(1); return Value(s.find(expect_str(args[0], e.line, "argument")) != std::string::npos); }
            if (m == "starts_with") { need(1); return Value(s.rfind(expect_str(args[0], e.line, "argument"), 0) == 0); }
            if (m == "ends_with")
            {
                need(1);
                const auto& suf = expect_str(args[0], e.line, "argument");
                return Value(s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0);
            }
            if (m == "index_of")
            {
                need(1);
                auto pos = s.find(expect_str(args[0], e.line, "argument"));
                return Value(pos == std::string::npos ? std::int64_t{-1} : static_cast<std::int64_t>(pos));
            }
            if (m == "substr")
            {
                need(2);
                auto a = expect_int(args[0], e.line, "start"), b = expect_int(args[1], e.line, "end");
                if (a < 0 || b < a || static_cast<std::size_t>(b) > s.size())
                    fail(e.line, "substr bounds out of range");
                return Value(s.substr(static_cast<std::size_t>(a), static_cast<std::size_t>(b - a)));
            }
            if (m == "repeat")
            {
                need(1);
                auto n = expect_int(args[0], e.line, "count");
                if (n < 0 || n * static_cast<std::int64_t>(s.size()) > 10'000'000)
                    fail(e.line, "repeat count out of range");
                std::string out;
                for (std::int64_t i = 0; i < n; ++i)
                    out += s;
                return Value(out);
            }
            if (m == "replace")
            {
                need(2);
                const auto& from = expect_str(args[0], e.line, "pattern");
                const auto& to = expect_str(args[1], e.line, "replacement");
                if (from.empty())
                    fail(e.line, "pattern must not be empty");
                std::string out;
                std::size_t start = 0, pos;
                while ((pos = s.find(from, start)) != std::string::npos)
                {
                    out += s.substr(start, pos - start) + to;
                    start = pos + from.size();
                }
                return Value(out + s.substr(start));
            }
            if (m == "to_int")
            {
                need(0);
                std::string t = s;
                if (t.empty() || t == "-")
                    return Value();
                std::size_t i = t[0] == '-' ? 1 : 0;
                std::int64_t v = 0;
                for (; i < t.size(); ++i)
                {
                    if (!std::isdigit(static_cast<unsigned char>(t[i])))
                        return Value();
                    if (v > (INT64_MAX - (t[i] - '0')) / 10)
                        return Value();
                    v = v * 10 + (t[i] - '0');
                }
                return Value(t[0] == '-' ? -v : v);
            }
            if (m == "code")
            {
                need(0);
                if (s.size() != 1)
                    fail(e.line, "code expects a one-character Str");
                return Value(static_cast<std::int64_t>(static_cast<unsigned char>(s[0])));
            }
        }
        else if (recv.is_array())
        {
            auto arr = std::get<std::shared_ptr<Array>>(recv.v);
            if (m == "len") { need(0); return Value(static_cast<std::int64_t>(arr->size())); }
            if (m == "push") { need(1); arr->push_back(args[0]); return Value(); }
            if (m == "pop")
            {
                need(0);
                if (arr->empty())
                    fail(e.line, "pop from empty Array");
                Value v = arr->back();
                arr->pop_back();
                return v;
            }
            if (m == "contains")
            {
                need(1);
                return Value(std::any_of(arr->begin(), arr->end(), [&](const Value& x) { return equal(x, args[0]); }));
            }
            if (m == "index_of")
            {
                need(1);
                for (std::size_t i = 0; i < arr->size(); ++i)
                    if (equal((*arr)[i], args[0]))
                        return Value(static_cast<std::int64_t>(i));
                return Value(std::int64_t{-1});
            }
            if (m == "join")
            {
                need(1);
                const auto& sep = expect_str(args[0], e.line, "separator");
                std::string out;
                for (std::size_t i = 0; i < arr->size(); ++i)
                    out += (i ? sep : "") + display((*arr)[i]);
                return Value(out);
            }
            if (m == "sort")
            {
                need(0);
                bool ints = std::all_of(arr->begin(), arr->end(), [](const Value& v) { return v.is_int(); });
                bool strs = std::all_of(arr->begin(), arr->end(), [](const Value& v) { return v.is_str(); });
                if (!ints && !strs)
                    fail(e.line, "sort requires all Int or all Str elements");
                std::stable_sort(arr->begin(), arr->end(), [&](const Value& a, const Value& b) {
                    if (ints)
                        return std::get<std::int64_t>(a.v) < std::get<std::int64_t>(b.v);
                    return std::get<std::string>(a.v) < std::get<std::string>(b.v);
                });
                return Value();
            }
            if (m == "reverse") { need(0); std::reverse(arr->begin(), arr->end()); return Value(); }
            if (m == "slice")
            {
                need(2);
                auto a = expect_int(args[0], e.line, "start"), b = expect_int(args[1], e.line, "end");
                if (a < 0 || b < a || static_cast<std::size_t>(b) > arr->size())
                    fail(e.line, "slice bounds out of range");
                return make_array(Array(arr->begin() + a, arr->begin() + b));
            }
            if (m == "copy") { need(0); return make_array(*arr); }
        }
        else if (recv.is_map())
        {
            auto mp = std::get<std::shared_ptr<Map>>(recv.v);
            if (m == "len") { need(0); return Value(static_cast<std::int64_t>(mp->size())); }
            if (m == "get")
            {
                need(1);
                auto it = mp->find(to_key(args[0], e.line));
                return it == mp->end() ? Value() : it->second;
            }
            if (m == "set") { need(2); (*mp)[to_key(args[0], e.line)] = args[1]; return Value(); }
            if (m == "has") { need(1); return Value(mp->count(to_key(args[0], e.line)) > 0); }
            if (m == "remove") { need(1); return Value(mp->erase(to_key(args[0], e.line)) > 0); }
            if (m == "keys" || m == "values")
            {
                need(0);
                Array out;
                for (const auto& [k, v] : *mp)
                    out.push_back(m == "keys" ? from_key(k) : v);
                return make_array(std::move(out));
            }
        }
        else if (recv.is_int())
        {
            auto x = std::get<std::int64_t>(recv.v);
            if (m == "to_str") { need(0); return Value(std::to_string(x)); }
            if (m == "abs") { need(0); return Value(x < 0 ? wrap(0 - static_cast<std::uint64_t>(x)) : x); }
        }
        fail(e.line, std::string("type ") + type_name(recv) + " has no method '" + m + "'");
    }
};

}  // namespace pebble

int main(int argc, char** argv)
{
    using namespace pebble;
    std::ios::sync_with_stdio(false);
    bool check_only = false;
    std::string path;
    for (int i = 1; i < argc; ++i)
    {
        std::string_view a = argv[i];
        if (a == "--check")
            check_only = true;
        else if (a == "--version")
        {
            std::cout << "pebble 0.3.1\n";
            return 0;
        }
        else
            path = a;
    }
    if (path.empty())
    {
        std::cerr << "usage: pebble [--check] <file.pbl>\n";
        return kExitNoInput;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        std::cerr << "error: cannot read " << path << "\n";
        return kExitNoInput;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string src = buf.str();

    Program prog;
    try
    {
        prog = Parser(lex(src)).parse_program();
    }
    catch (const ParseError& e)
    {
        std::cerr << path << ":" << e.line << ":" << e.col << ": parse error: " << e.message << "\n";
        return kExitParse;
    }
    if (check_only)
        return 0;

    int code = 0;
    try
    {
        Interpreter interp(prog);
        interp.run();
    }
    catch (const RuntimeError& e)
    {
        std::cout.flush();
        std::cerr << path << ":" << e.line << ": runtime error: " << e.message << "\n";
        code = kExitRuntime;
    }
    catch (const AssertFailure& e)
    {
        std::cout.flush();
        std::cerr << path << ":" << e.line << ": assertion failed: " << e.message << "\n";
        code = kExitAssert;
    }
    catch (const ExitRequest& e)
    {
        code = e.code;
    }
    catch (const ReturnSignal&)
    {
        std::cerr << path << ": runtime error: 'return' outside of a function\n";
        code = kExitRuntime;
    }
    catch (const BreakSignal&)
    {
        std::cerr << path << ": runtime error: 'break' outside of a loop\n";
        code = kExitRuntime;
    }
    catch (const ContinueSignal&)
    {
        std::cerr << path << ": runtime error: 'continue' outside of a loop\n";
        code = kExitRuntime;
    }
    std::cout.flush();
    return code;
}
