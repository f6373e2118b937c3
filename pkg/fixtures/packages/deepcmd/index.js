const cp = require("child_process");

function sinkWrapper(arg) {
  cp.execSync("echo " + arg);
}

function mid(v) {
  if (!v.startsWith("--name=")) {
    return "ignored";
  }
  sinkWrapper(v.slice(7));
}

function entry(opts) {
  mid(opts);
}

module.exports = { entry };
