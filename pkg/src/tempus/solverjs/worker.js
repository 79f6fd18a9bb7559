// SMT-LIB2 stdio worker over the WASM z3 build.
// Reads top-level commands from stdin and evaluates them in one persistent
// context. Commands are batched: everything complete in the input buffer is
// handed to the solver as a single string, because rapid command-by-command
// evaluation has proven racy in the WASM bindings. The driving process
// frames requests with (echo "...") sentinels, which z3 itself answers.
"use strict";

const { init } = require("z3-solver");

function splitCommands(buf) {
  let depth = 0;
  let last = 0;
  const out = [];
  let inStr = false;
  for (let i = 0; i < buf.length; i++) {
    const ch = buf[i];
    if (inStr) {
      if (ch === '"') inStr = false;
      continue;
    }
    if (ch === '"') inStr = true;
    else if (ch === "(") depth++;
    else if (ch === ")") {
      depth--;
      if (depth === 0) {
        out.push(buf.slice(last, i + 1).trim());
        last = i + 1;
      }
    }
  }
  return [out, buf.slice(last)];
}

(async () => {
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  let pending = "";

  async function evalBatch(cmds) {
    if (!cmds.length) return;
    let res;
    try {
      res = await Z3.eval_smtlib2_string(ctx, cmds.join("\n"));
    } catch (e) {
      // keep the request framing alive: answer the echo commands ourselves
      res = '(error "' + String(e).replace(/"/g, "'") + '")\n';
      for (const c of cmds) {
        const m = /^\(echo\s+"([^"]*)"\s*\)$/.exec(c);
        if (m) res += m[1] + "\n";
      }
    }
    if (res && res.trim().length > 0) {
      process.stdout.write(res.endsWith("\n") ? res : res + "\n");
    }
  }

  process.stdin.setEncoding("utf8");
  for await (const chunk of process.stdin) {
    pending += chunk;
    const [cmds, rest] = splitCommands(pending);
    pending = rest;
    const quit = cmds.indexOf("(exit)");
    if (quit >= 0) {
      await evalBatch(cmds.slice(0, quit));
      process.exit(0);
    }
    await evalBatch(cmds.filter((c) => c.length > 0));
  }
})();
