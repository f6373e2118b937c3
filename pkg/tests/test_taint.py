from exploitforge.frontend import build_model_from_sources, parse_package
from exploitforge.taint import analyze_taint, build_call_graph, default_taint_spec
from exploitforge.taint.callgraph import span_key
from exploitforge.taint.spec import TaintSpec, SinkPattern, load_taint_spec

from conftest import fixture_package

SPEC = default_taint_spec()


def _model(src: str, name: str = "micro"):
    return build_model_from_sources(name, "1.0.0", {"index.js": src}, "index.js")


class TestCallGraph:
    def test_direct_alias_resolves_to_pointer_edge(self):
        m = _model(
            "function helper(x) { return x; }\n"
            "function top(a) {\n  const f = helper;\n  f(a);\n}\n"
            "module.exports = { top };\n")
        cg = build_call_graph(m)
        edges = [(e.candidates, e.resolution) for e in cg.edges]
        assert (["index.js::helper"], "pointer") in edges

    def test_name_arity_fallback_across_files(self):
        m = build_model_from_sources("p", "1.0.0", {
            "index.js": "function top(a, b) { g(a, b); }\nmodule.exports = { top };\n",
            "liba.js": "function g(x, y) { return x; }\nmodule.exports = { g };\n",
            "libb.js": "function g(p, q) { return q; }\nmodule.exports = { g };\n",
        }, "index.js")
        cg = build_call_graph(m)
        (edge,) = [e for e in cg.edges if e.resolution == "nameArity"]
        assert edge.candidates == ["liba.js::g", "libb.js::g"]

    def test_arity_mismatch_gives_no_edge(self):
        m = build_model_from_sources("p", "1.0.0", {
            "index.js": "function top(a) { g(a); }\nmodule.exports = { top };\n",
            "liba.js": "function g(x, y) { return x; }\nmodule.exports = { g };\n",
        }, "index.js")
        cg = build_call_graph(m)
        assert [e for e in cg.edges if e.caller == "index.js::top"] == []

    def test_f_cmd_deep_three_node_chain(self):
        m = parse_package(fixture_package("deepcmd"))
        cg = build_call_graph(m)
        chain = {(e.caller, tuple(e.candidates)) for e in cg.edges}
        assert ("index.js::entry", ("index.js::mid",)) in chain
        assert ("index.js::mid", ("index.js::sinkWrapper",)) in chain
        assert all(e.resolution == "pointer" for e in cg.edges)

    def test_edge_endpoints_are_nodes(self):
        for pkg in ["shellq", "deepcmd", "deepmix", "hostping"]:
            m = parse_package(fixture_package(pkg))
            cg = build_call_graph(m)
            for e in cg.edges:
                assert e.caller in cg.nodes
                assert all(c in cg.nodes for c in e.candidates)
                assert e.candidates  # nameArity edges have >= 1 candidate


class TestAnalyzeTaint:
    def test_f_cmd_single_path(self):
        m = parse_package(fixture_package("shellq"))
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert len(res.paths) == 1
        p = res.paths[0]
        assert p.vuln_type == "CmdInj"
        assert p.source_param == ("index.js::run", 0)
        assert p.sink_callee_text == "exec"
        assert p.sink_arg_index == 0
        assert p.hops[0].fn == "index.js::run"
        assert p.hops[-1].fn == "index.js::run"

    def test_listed_sanitizer_kills_taint(self):
        src = (
            'const { exec } = require("child_process");\n'
            "function run(cmd) {\n"
            '  exec("ls " + toInt(cmd));\n'
            "}\n"
            "module.exports = { run };\n")
        m = _model(src)
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert res.paths == []

    def test_unlisted_custom_sanitizer_keeps_path(self):
        m = parse_package(fixture_package("hostping"))
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert len(res.paths) == 1  # the later FP verdict is the agents' job
        assert "index.js::stripMeta" in {h.fn for h in res.paths[0].hops}

    def test_whole_array_over_taint(self):
        m = parse_package(fixture_package("queuectl"))
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert [p.vuln_type for p in res.paths] == ["CmdInj"]

    def test_proto_requires_tainted_key_and_value(self):
        src = (
            "function set(obj, key) {\n"
            '  obj[key] = "constant";\n'
            "}\n"
            "module.exports = { set };\n")
        m = _model(src)
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert [p for p in res.paths if p.vuln_type == "Proto"] == []

    def test_deterministic_path_order(self):
        m = parse_package(fixture_package("deepcmd"))
        cg = build_call_graph(m)
        a = [p.to_json() for p in analyze_taint(m, cg, SPEC).paths]
        b = [p.to_json() for p in analyze_taint(m, cg, SPEC).paths]
        assert a == b

    def test_loop_body_visited_once_per_context(self):
        src = (
            'const { exec } = require("child_process");\n'
            "function work(input) {\n"
            '  let acc = "";\n'
            "  for (let i = 0; i < 3; i = i + 1) {\n"
            "    acc = acc + input;\n"
            "  }\n"
            "  exec(acc);\n"
            "}\n"
            "function entryA(x) { work(x); }\n"
            "function entryB(y) { work(y); }\n"
            "module.exports = { entryA, entryB };\n")
        m = _model(src)
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert res.loop_visits  # the loop was seen
        assert all(count == 1 for count in res.loop_visits.values())
        # two entries -> two distinct contexts for the same loop
        assert len(res.loop_visits) == 2
        assert len(res.paths) == 2

    def test_recursive_callee_expanded_once(self):
        m = parse_package(fixture_package("deepmix"))
        res = analyze_taint(m, build_call_graph(m), SPEC)
        assert any(p.vuln_type == "Proto" for p in res.paths)  # terminates, finds pollution

    def test_budget_exceeded_flags_incomplete(self):
        m = parse_package(fixture_package("deepcmd"))
        res = analyze_taint(m, build_call_graph(m), SPEC, max_visits=5)
        assert res.incomplete

    def test_paths_capped_per_sink(self):
        lines = ['const { exec } = require("child_process");',
                 "function entry(p) {"]
        # many distinct routes into a single sink call
        for i in range(12):
            lines.append(f"  const v{i} = p + \"x{i}\";")
        joined = " + ".join(f"v{i}" for i in range(12))
        lines += [f"  exec({joined});", "}", "module.exports = { entry };"]
        m = _model("\n".join(lines))
        res = analyze_taint(m, build_call_graph(m), SPEC)
        by_sink = {}
        for p in res.paths:
            by_sink.setdefault(p.sink_id(), []).append(p)
        for paths in by_sink.values():
            assert len(paths) <= 8
            lengths = [len(p.hops) for p in paths]
            assert lengths == sorted(lengths)  # shortest-first


class TestSpecLoading:
    def test_load_from_file(self, tmp_path):
        cfg = tmp_path / "taint-spec.json"
        cfg.write_text(
            '{"vulnTypes": [{"vulnType": "CmdInj",'
            ' "sinks": [{"callee": "child_process.exec", "argIndex": 0}]}],'
            ' "sanitizers": ["clean"]}')
        spec = load_taint_spec(cfg)
        assert spec.vuln_types == ["CmdInj"]
        assert spec.sanitizers == ["clean"]

    def test_restriction(self):
        spec = default_taint_spec()
        only = spec.restricted_to(["Proto"])
        assert only.vuln_types == ["Proto"]

    def test_bare_vs_dotted_matching(self):
        pat = SinkPattern("CmdInj", "child_process.exec", 0)
        assert pat.matches("child_process.exec", "cp.exec", "exec")
        assert not pat.matches(None, "other.exec", "exec")
        bare = TaintSpec(sanitizers=["toInt"])
        assert bare.is_sanitizer(None, "utils.toInt", "toInt")
        assert not bare.is_sanitizer(None, "utils.toIntX", "toIntX")

    def test_unknown_vuln_type_rejected(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"vulnTypes": [{"vulnType": "Quantum", "sinks": []}]}')
        import pytest
        with pytest.raises(ValueError):
            load_taint_spec(cfg)

    def test_reserved_jndi_is_schema_placeholder_only(self, tmp_path):
        cfg = tmp_path / "jndi.json"
        cfg.write_text(
            '{"vulnTypes": [{"vulnType": "JNDI",'
            ' "sinks": [{"callee": "lookup", "argIndex": 0}]},'
            ' {"vulnType": "CmdInj",'
            ' "sinks": [{"callee": "child_process.exec", "argIndex": 0}]}]}')
        spec = load_taint_spec(cfg)
        assert spec.vuln_types == ["CmdInj"]  # JNDI accepted in the file, not executed
