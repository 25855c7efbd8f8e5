import { ChatApp } from './app';

// Base URL and user come from the query string so the static page needs no
// build-time configuration: index.html?gateway=http://host:8080&user=u1
const params = new URLSearchParams(window.location.search);
const gateway = params.get('gateway') ?? 'http://127.0.0.1:8080';
const userId = params.get('user') ?? 'u1';

const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app element');
}

const app = new ChatApp(gateway, { userId, root });
app.start().catch((error) => {
  root.textContent = `Could not reach the gateway at ${gateway}: ${error}`;
});
